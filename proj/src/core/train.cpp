#include "core/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace bgn {

Adam::Adam(std::span<const DenseMatrix> params, double lr, double beta1,
           double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step(std::span<DenseMatrix> params,
                std::span<const DenseMatrix> grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(),
          Errc::dim_mismatch, "Adam: parameter list changed size");
  ++step_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data();
    const double* g = grads[i].data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t t = 0; t < params[i].size(); ++t) {
      m[t] = beta1_ * m[t] + (1.0 - beta1_) * g[t];
      v[t] = beta2_ * v[t] + (1.0 - beta2_) * g[t] * g[t];
      double mhat = m[t] / bc1;
      double vhat = v[t] / bc2;
      p[t] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

TrainHistory train(Model& model, const Graph& g, const Split& split,
                   const TrainOptions& opts) {
  require(!split.train_ids.empty(), Errc::bad_param,
          "train: empty training split");
  RngStream rng(opts.seed);
  Adam opt(model.params(), opts.lr, opts.beta1, opts.beta2, opts.eps);
  const bool reinforce = model.config().estimator == Estimator::reinforce;
  const bool have_val = !split.val_ids.empty();

  TrainHistory history;
  history.reserve(opts.epochs);
  double best_val = -1.0;
  std::size_t since_best = 0;
  std::vector<DenseMatrix> best_params;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    ForwardOptions fo;
    fo.record = true;
    fo.rng = reinforce ? &rng : nullptr;
    ForwardResult fwd = model.forward(g, fo);
    auto [loss, train_acc] =
        loss_and_accuracy(fwd.probs, g.labels, split.train_ids);
    if (!std::isfinite(loss))
      fail(Errc::diverged_loss,
           "train: loss became non-finite at epoch " + std::to_string(epoch));
    Grads grads = model.backward(g, split.train_ids, fwd, loss);
    opt.step(model.params(), grads.by_param);
    model.clip_latent_weights();
    for (const auto& pm : model.params()) {
      if (!pm.all_finite())
        fail(Errc::diverged_loss, "train: parameters became non-finite");
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss;
    stats.train_acc = train_acc;
    if (have_val) {
      stats.val_acc = evaluate(model, g, split.val_ids);
      if (stats.val_acc > best_val) {
        best_val = stats.val_acc;
        since_best = 0;
        best_params.assign(model.params().begin(), model.params().end());
      } else if (++since_best > opts.patience) {
        history.push_back(stats);
        break;
      }
    }
    history.push_back(stats);
  }
  if (have_val && !best_params.empty()) {
    std::copy(best_params.begin(), best_params.end(), model.params().begin());
  }
  return history;
}

double evaluate(const Model& model, const Graph& g,
                std::span<const std::uint32_t> ids) {
  ForwardOptions fo;  // inference: no recording, deterministic binarization
  ForwardResult fwd = model.forward(g, fo);
  return loss_and_accuracy(fwd.probs, g.labels, ids).second;
}

BenchReport bench_inference(const Model& model, const Graph& g,
                            std::span<const std::uint32_t> eval_ids,
                            std::size_t trials, std::size_t warmup) {
  require(trials >= 1, Errc::bad_param, "bench: need at least one trial");
  using clock = std::chrono::steady_clock;
  ForwardOptions fo;
  for (std::size_t i = 0; i < warmup; ++i) (void)model.forward(g, fo);
  std::vector<double> secs(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    auto t0 = clock::now();
    ForwardResult fwd = model.forward(g, fo);
    auto t1 = clock::now();
    secs[i] = std::chrono::duration<double>(t1 - t0).count();
  }
  std::sort(secs.begin(), secs.end());

  BenchReport report;
  report.level = level_to_string(model.config().level);
  report.trials = trials;
  report.median_seconds = secs[trials / 2];
  report.min_seconds = secs.front();
  report.max_seconds = secs.back();
  report.bits = model.accounting(g);
  if (!eval_ids.empty()) report.accuracy = evaluate(model, g, eval_ids);
  return report;
}

void set_reference(BenchReport& report, const BenchReport& reference) {
  report.speedup_vs_ref = reference.median_seconds / report.median_seconds;
  report.weight_space_ratio =
      static_cast<double>(reference.bits.weight_param_bits) /
      static_cast<double>(report.bits.weight_param_bits);
  report.embed_space_ratio =
      report.bits.embedding_bits == 0
          ? std::numeric_limits<double>::quiet_NaN()
          : static_cast<double>(reference.bits.embedding_bits) /
                static_cast<double>(report.bits.embedding_bits);
  report.coeff_space_ratio =
      static_cast<double>(reference.bits.coefficient_bits) /
      static_cast<double>(report.bits.coefficient_bits);
}

}  // namespace bgn
