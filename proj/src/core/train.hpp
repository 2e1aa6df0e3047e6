#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "core/bgat.hpp"
#include "core/graph.hpp"

namespace bgn {

/// Adaptive-moment optimizer over a flat list of parameter matrices.
class Adam {
 public:
  Adam(std::span<const DenseMatrix> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<DenseMatrix> params,
            std::span<const DenseMatrix> grads);

  double learning_rate() const { return lr_; }
  std::size_t steps_taken() const { return step_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<DenseMatrix> m_, v_;
};

struct TrainOptions {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 300;
  std::size_t patience = 30;  // early stop on val accuracy when a val split exists
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = std::numeric_limits<double>::quiet_NaN();
};

using TrainHistory = std::vector<EpochStats>;

/// Full-graph training: forward, cross-entropy on the train ids, backward
/// through the configured estimator, optimizer step, latent clip. Throws
/// DivergedLoss when the loss stops being finite. Deterministic under seed.
TrainHistory train(Model& model, const Graph& g, const Split& split,
                   const TrainOptions& opts);

/// Accuracy on `ids` (read-only; empty ids count as vacuously 1.0).
double evaluate(const Model& model, const Graph& g,
                std::span<const std::uint32_t> ids);

struct BenchReport {
  std::string level;
  std::size_t trials = 0;
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  BitAccounting bits;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  // Filled by set_reference against the level=none row.
  double speedup_vs_ref = std::numeric_limits<double>::quiet_NaN();
  double weight_space_ratio = std::numeric_limits<double>::quiet_NaN();
  double embed_space_ratio = std::numeric_limits<double>::quiet_NaN();
  double coeff_space_ratio = std::numeric_limits<double>::quiet_NaN();
};

/// Median full-graph inference wall clock over `trials` runs after `warmup`
/// discarded runs, plus the bit accounting. Accuracy is computed on
/// `eval_ids` when nonempty.
BenchReport bench_inference(const Model& model, const Graph& g,
                            std::span<const std::uint32_t> eval_ids,
                            std::size_t trials, std::size_t warmup = 3);

/// Ratios are recomputed from the raw measured fields, never copied in.
void set_reference(BenchReport& report, const BenchReport& reference);

}  // namespace bgn
