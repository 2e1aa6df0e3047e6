#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "core/binarize.hpp"
#include "core/bitmatrix.hpp"
#include "core/dense.hpp"
#include "core/graph.hpp"
#include "core/rng.hpp"

namespace bgn {

/// Which parts of the network are binarized: weights (w), embeddings /
/// activations (e), attention coefficients (c). `wec` implies `we`.
enum class Level { none, w, e, we, wec };
constexpr bool level_binarizes_weights(Level l) {
  return l == Level::w || l == Level::we || l == Level::wec;
}
constexpr bool level_binarizes_embeddings(Level l) {
  return l == Level::e || l == Level::we || l == Level::wec;
}
constexpr bool level_ternarizes_coefficients(Level l) {
  return l == Level::wec;
}
Level level_from_string(const std::string& s);
std::string level_to_string(Level l);

enum class Estimator { ste, reinforce };
Estimator estimator_from_string(const std::string& s);
std::string estimator_to_string(Estimator e);

enum class Scoring { additive, dot };
enum class LogitScale { unit, inv_sqrt_dim };

struct ModelConfig {
  std::size_t n_layers = 2;  // includes the output layer
  std::size_t heads = 8;
  std::size_t head_dim = 8;
  Level level = Level::none;
  Estimator estimator = Estimator::ste;
  Scoring scoring = Scoring::additive;
  bool center_coefficients = true;
  LogitScale logit_scale = LogitScale::inv_sqrt_dim;
  bool real_output_layer = false;
  bool avg_output_heads = false;  // average K output heads instead of one
  double ste_clip = 1.0;          // <= 0 disables the saturation clip

  void validate() const;
};

/// Attention coefficients for one head from precomputed raw edge scores
/// (aligned with the graph's CSR slots): masked softmax per neighborhood,
/// then optionally centered and ternarized. A ternary row that comes out all
/// zero (uniform coefficients) falls back to all +1 over its neighborhood.
struct CoeffOutput {
  std::vector<double> soft;      // per CSR slot, rows sum to 1
  std::vector<double> centered;  // per CSR slot; filled in ternary+center mode
  TernaryMatrix tern;            // n_nodes x n_nodes; filled in ternary mode
  std::vector<std::uint8_t> fallback;  // per node; filled in ternary mode
  bool ternary = false;
};
CoeffOutput attention_coefficients(const Graph& g,
                                   std::span<const double> scores,
                                   bool ternarize, bool center);

/// Sum of -log p[v, label_v] over ids, plus argmax accuracy (ties resolved
/// to the lowest class index).
std::pair<double, double> loss_and_accuracy(const DenseMatrix& probs,
                                            std::span<const std::uint32_t> labels,
                                            std::span<const std::uint32_t> ids);

struct ForwardOptions {
  bool record = false;        // keep caches for backward
  bool fast_kernels = true;   // xnor/popcount + masked summation paths
  RngStream* rng = nullptr;   // enables stochastic binarization (reinforce)
};

struct HeadCache {
  DenseMatrix p;  // n_nodes x d_out, transformed inputs
  std::vector<double> s_src, s_dst;           // additive scoring halves
  std::vector<double> scores, soft, centered;  // per CSR slot
  TernaryMatrix tern;
  std::vector<std::uint8_t> fallback;
  DenseMatrix z;       // pre-activation
  BitMatrix z_bits;    // binarized output (stochastic draw under reinforce)
};

struct LayerCache {
  DenseMatrix in_real;  // effective input values (+-1 when input is binary)
  BitMatrix in_bits;
  bool in_is_binary = false;
  std::vector<DenseMatrix> w_eff;        // per head, effective weight values
  std::vector<BitMatrix> w_eff_t_bits;   // per head, packed transposed view
  std::vector<BitMatrix> w_draw;         // per head, the +-1 draw (binarized w)
  std::vector<HeadCache> heads;
};

struct ForwardResult {
  DenseMatrix logits;  // n_nodes x n_classes
  DenseMatrix probs;   // row-stochastic
  std::vector<LayerCache> layers;
  bool recorded = false;
};

struct Grads {
  std::vector<DenseMatrix> by_param;  // aligned with Model::params()
};

/// Parameter-bit and activation-bit bookkeeping for the benchmark report.
struct BitAccounting {
  std::uint64_t weight_param_bits = 0;
  std::uint64_t scoring_param_bits = 0;
  std::uint64_t embedding_bits = 0;    // hidden representations, whole graph
  std::uint64_t coefficient_bits = 0;  // attention coefficients, whole graph
};

/// Multi-head binarized graph attention stack. Hidden layers concatenate K
/// head outputs; the final layer aggregates once (or averages K heads) into
/// class logits. Latent weights stay real; binary views are refreshed from
/// them on every forward pass.
class Model {
 public:
  Model(ModelConfig cfg, std::size_t in_dim, std::size_t n_classes,
        RngStream& init_rng);

  const ModelConfig& config() const { return cfg_; }
  std::size_t input_dim() const { return in_dim_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_layers() const { return cfg_.n_layers; }

  std::span<DenseMatrix> params() { return params_; }
  std::span<const DenseMatrix> params() const { return params_; }
  bool param_is_weight(std::size_t idx) const;
  /// Index of a head's weight matrix / scoring halves in params().
  std::size_t weight_index(std::size_t layer, std::size_t head) const;
  std::size_t score_src_index(std::size_t layer, std::size_t head) const;
  std::size_t score_dst_index(std::size_t layer, std::size_t head) const;
  std::size_t heads_in_layer(std::size_t layer) const;
  std::size_t layer_in_dim(std::size_t layer) const;
  std::size_t layer_out_dim(std::size_t layer) const;
  bool layer_weights_binarized(std::size_t layer) const;

  ForwardResult forward(const Graph& g, const ForwardOptions& opts) const;
  /// Gradients for every latent parameter; requires a recorded forward.
  Grads backward(const Graph& g, std::span<const std::uint32_t> ids,
                 const ForwardResult& fwd, double loss_value);

  Grads zero_grads() const;
  /// Clamp latent weight matrices to [-1, 1]; called after optimizer steps.
  void clip_latent_weights();
  void ensure_finite() const;

  BitAccounting accounting(const Graph& g) const;

  /// "BGNM" checkpoint: config, latent parameters, and the binarized weight
  /// views. Loading re-binarizes the latents and insists the stored views
  /// match bit for bit.
  void save(std::ostream& os) const;
  static Model load(std::istream& is);
  void save_file(const std::string& path) const;
  static Model load_file(const std::string& path);

  std::vector<ReinforceState>& reinforce_weight_states() { return rf_weight_; }
  std::vector<ReinforceState>& reinforce_act_states() { return rf_act_; }

 private:
  Model() = default;
  void init_index();

  ModelConfig cfg_;
  std::size_t in_dim_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<DenseMatrix> params_;
  std::vector<std::size_t> layer_param_base_;
  std::vector<ReinforceState> rf_weight_;  // one per (layer, head)
  std::vector<ReinforceState> rf_act_;     // one per hidden (layer, head)
};

}  // namespace bgn
