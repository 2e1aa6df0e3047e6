#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/bitmatrix.hpp"
#include "core/dense.hpp"
#include "core/rng.hpp"

namespace bgn::gmn {

/// Synthetic graph-edit triplet protocol: binomial base graph, positive
/// partner with k_pos substituted edges, negative partner with k_neg.
struct TripletConfig {
  std::size_t nodes = 20;
  double edge_prob = 0.2;
  std::size_t k_pos = 1;
  std::size_t k_neg = 2;

  void validate() const;
};

/// Plain undirected graph for the matching study (no features or labels).
struct MatchGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // u < v, sorted
  std::vector<std::vector<std::uint32_t>> adj;

  void build_adjacency();
  static MatchGraph binomial(std::size_t n, double p, RngStream& rng);
  /// Removes k existing edges and adds k fresh ones (disjoint from both the
  /// original and the removed set), preserving the edge count.
  MatchGraph substitute_edges(std::size_t k, RngStream& rng) const;

  bool operator==(const MatchGraph& other) const {
    return n == other.n && edges == other.edges;
  }
};

struct Triplet {
  MatchGraph g1, g2, g3;
};

/// G2 = G1 with k_pos edges substituted, G3 likewise with k_neg. Resamples
/// G1 (bounded retries) when it is too dense or sparse to substitute.
Triplet gen_triplet(const TripletConfig& cfg, RngStream& rng);

struct MatcherConfig {
  std::size_t node_dim = 32;
  std::size_t graph_dim = 64;
  std::size_t rounds = 3;
  bool binary = true;         // binarize node reps + graph codes
  bool balance_codes = true;  // mean-center graph codes before binarization

  void validate() const;
};

/// Simplified cross-graph matching network: linear node encoder, `rounds`
/// propagation steps combining neighborhood sums with cross-graph attention
/// (softmax over pairwise node-representation dot products), gated-sum
/// aggregation into a graph code. Binary mode runs sign activations with
/// straight-through gradients and compares codes by hamming similarity;
/// reference mode substitutes tanh and an approximate-hamming similarity.
/// Both modes share all structure and parameter shapes.
class Matcher {
 public:
  Matcher(MatcherConfig cfg, RngStream& init_rng);

  const MatcherConfig& config() const { return cfg_; }
  std::span<DenseMatrix> params() { return params_; }
  std::span<const DenseMatrix> params() const { return params_; }

  struct RoundCache {
    DenseMatrix scores;            // n_a x n_b, scaled dots
    DenseMatrix alpha;             // a attends b, rows sum to 1
    DenseMatrix beta;              // b attends a
    DenseMatrix mu_a, mu_b;        // match vectors
    DenseMatrix msg_a, msg_b;      // neighborhood sums
    DenseMatrix cat_a, cat_b;      // [r ; msg ; mu]
  };
  struct SideCache {
    std::vector<DenseMatrix> h;    // pre-activations, rounds+1 entries
    std::vector<DenseMatrix> r;    // effective reps (sign or tanh of h)
    DenseMatrix features;
    std::vector<std::vector<std::uint32_t>> adj;  // for the message backward
    DenseMatrix gate_pre, gate, o; // aggregation pieces
    std::vector<double> g_raw;     // pre-code
    std::vector<double> code;      // +-1 in binary mode, tanh otherwise
  };
  struct PairForward {
    SideCache a, b;
    std::vector<RoundCache> rounds;
    double similarity = 0.0;
    bool recorded = false;
  };

  PairForward forward_pair(const MatchGraph& ga, const MatchGraph& gb,
                           bool record) const;
  /// Inference-only similarity; binary mode scores node codes with
  /// xnor/popcount dots.
  double similarity(const MatchGraph& ga, const MatchGraph& gb) const;

  /// Accumulates parameter gradients for d(loss)/d(similarity) = dsim.
  void backward_pair(const PairForward& fwd, double dsim,
                     std::span<DenseMatrix> grads) const;

  std::vector<DenseMatrix> zero_grads() const;

 private:
  enum ParamId { kEnc = 0, kUpd = 1, kGate = 2, kOut = 3, kParamCount = 4 };
  DenseMatrix node_features(const MatchGraph& g) const;
  /// Effective representation of a pre-activation block.
  DenseMatrix effective(const DenseMatrix& h) const;

  MatcherConfig cfg_;
  std::vector<DenseMatrix> params_;
};

struct MatcherEvalResult {
  double pair_auc = 0.0;
  double triplet_acc = 0.0;
  double median_pair_seconds = 0.0;
};

struct MatcherTrainOptions {
  std::size_t steps = 3000;
  double margin = 0.1;
  double lr = 1e-2;
};

/// Margin-loss training over freshly generated triplets; returns the mean
/// hinge loss over the last 100 steps.
double train_matcher(Matcher& m, const TripletConfig& cfg,
                     const MatcherTrainOptions& opts, RngStream& rng);

/// Pair AUC over n_pairs fresh labeled pairs (half positive, half negative,
/// ties credited 0.5) and triplet accuracy over n_triplets fresh triplets.
MatcherEvalResult eval_matcher(const Matcher& m, const TripletConfig& cfg,
                               std::size_t n_pairs, std::size_t n_triplets,
                               RngStream& rng);

/// Mann-Whitney AUC with 0.5 credit for ties.
double pair_auc(std::span<const double> positive_scores,
                std::span<const double> negative_scores);

struct ScoringBench {
  double binary_seconds = 0.0;
  double real_seconds = 0.0;
};

/// Times one all-pairs scoring pass (nodes x nodes dots at width `dim`):
/// packed xnor/popcount versus real-valued dots.
ScoringBench bench_pairwise_scoring(std::size_t nodes, std::size_t dim,
                                    std::size_t trials, RngStream& rng);

}  // namespace bgn::gmn
