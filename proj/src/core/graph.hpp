#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/dense.hpp"
#include "core/rng.hpp"

namespace bgn {

/// Undirected graph with node features and class labels, stored as a
/// symmetric CSR adjacency. Every node carries a self-loop (added at build
/// time) so a node is always in its own neighborhood; n_edges counts
/// undirected non-self edges, so the adjacency holds 2*n_edges + n_nodes
/// entries. Immutable after construction; safe to share across threads.
struct Graph {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t n_classes = 0;
  std::vector<std::size_t> offsets;    // n_nodes + 1
  std::vector<std::uint32_t> targets;  // sorted within each row
  DenseMatrix features;                // n_nodes x n_features
  std::vector<std::uint32_t> labels;   // each < n_classes

  std::size_t n_features() const { return features.cols(); }
  std::size_t degree(std::size_t v) const {
    return offsets[v + 1] - offsets[v];
  }
  std::span<const std::uint32_t> neighbors(std::size_t v) const {
    return {targets.data() + offsets[v], degree(v)};
  }

  /// Scales each feature row by its L1 norm (zero rows left alone).
  void row_normalize_features();
  void validate() const;

  bool operator==(const Graph& other) const = default;
};

/// Builds the CSR from an undirected edge list: symmetrizes, deduplicates,
/// drops explicit self-loops and then adds one self-loop per node.
Graph build_graph(std::size_t n_nodes,
                  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges,
                  DenseMatrix features, std::vector<std::uint32_t> labels,
                  std::size_t n_classes);

struct Split {
  std::vector<std::uint32_t> train_ids, val_ids, test_ids;
};

struct Dataset {
  Graph graph;
  std::optional<Split> split;  // from split.tsv when present
};

/// Reads nodes.tsv / edges.tsv (and split.tsv when present) from `dir`.
Dataset load_dataset(const std::filesystem::path& dir, bool row_normalize);
/// Writes nodes.tsv / edges.tsv with dense indices as ids; self-loops are
/// omitted (they are re-added on load), so load(save(g)) == g.
void save_dataset(const Graph& g, const std::filesystem::path& dir);

/// per_class random training nodes from every class, then n_test random
/// nodes from the remainder. Deterministic under the stream's seed.
Split make_split(const Graph& g, std::size_t per_class, std::size_t n_test,
                 RngStream& rng);

/// Planted-partition test fixture: classes assigned round-robin, edge
/// probability split between intra/inter class mass by `homophily`, features
/// are a per-class 0/1 prototype with iid bit flips at rate `noise`.
Graph synth_citation_graph(std::size_t n, std::size_t n_features,
                           std::size_t n_classes, double homophily,
                           RngStream& rng, double noise = 0.1,
                           double mean_degree = 6.0);

}  // namespace bgn
