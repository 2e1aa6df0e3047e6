#include "core/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace bgn {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& file,
                             std::size_t line_no, const std::string& what) {
  fail(Errc::parse_error,
       file.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void Graph::row_normalize_features() {
  for (std::size_t i = 0; i < features.rows(); ++i) {
    double* r = features.row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < features.cols(); ++j) sum += std::abs(r[j]);
    if (sum > 0.0) {
      for (std::size_t j = 0; j < features.cols(); ++j) r[j] /= sum;
    }
  }
}

void Graph::validate() const {
  require(offsets.size() == n_nodes + 1, Errc::internal,
          "Graph: offsets length");
  require(offsets.front() == 0 && offsets.back() == targets.size(),
          Errc::internal, "Graph: offsets must cover targets");
  require(targets.size() == 2 * n_edges + n_nodes, Errc::internal,
          "Graph: adjacency size must be 2*n_edges + n_nodes");
  for (std::size_t v = 0; v < n_nodes; ++v) {
    require(offsets[v] <= offsets[v + 1], Errc::internal,
            "Graph: offsets must be nondecreasing");
    bool self = false;
    for (std::uint32_t u : neighbors(v)) {
      require(u < n_nodes, Errc::internal, "Graph: target out of range");
      if (u == v) self = true;
    }
    require(self, Errc::internal, "Graph: missing self-loop");
  }
  require(labels.size() == n_nodes, Errc::internal, "Graph: labels length");
  for (std::uint32_t l : labels) {
    require(l < n_classes, Errc::internal, "Graph: label out of range");
  }
  require(features.rows() == n_nodes, Errc::internal,
          "Graph: feature row count");
  features.ensure_finite("Graph features");
}

Graph build_graph(std::size_t n_nodes,
                  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges,
                  DenseMatrix features, std::vector<std::uint32_t> labels,
                  std::size_t n_classes) {
  for (auto& [u, v] : edges) {
    require(u < n_nodes && v < n_nodes, Errc::unknown_node,
            "build_graph: edge endpoint out of range");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });

  Graph g;
  g.n_nodes = n_nodes;
  g.n_edges = edges.size();
  g.n_classes = n_classes;
  g.features = std::move(features);
  g.labels = std::move(labels);

  std::vector<std::size_t> deg(n_nodes, 1);  // self-loop
  for (const auto& [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  g.offsets.assign(n_nodes + 1, 0);
  for (std::size_t v = 0; v < n_nodes; ++v) g.offsets[v + 1] = g.offsets[v] + deg[v];
  g.targets.resize(g.offsets.back());
  std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (std::size_t v = 0; v < n_nodes; ++v)
    g.targets[cursor[v]++] = static_cast<std::uint32_t>(v);
  for (const auto& [u, v] : edges) {
    g.targets[cursor[u]++] = v;
    g.targets[cursor[v]++] = u;
  }
  for (std::size_t v = 0; v < n_nodes; ++v) {
    std::sort(g.targets.begin() + g.offsets[v], g.targets.begin() + g.offsets[v + 1]);
  }
  g.validate();
  return g;
}

Dataset load_dataset(const std::filesystem::path& dir, bool row_normalize) {
  auto nodes_path = dir / "nodes.tsv";
  auto edges_path = dir / "edges.tsv";
  std::ifstream nodes_in(nodes_path);
  require(nodes_in.good(), Errc::io_error,
          "cannot open " + nodes_path.string());
  std::ifstream edges_in(edges_path);
  require(edges_in.good(), Errc::io_error,
          "cannot open " + edges_path.string());

  std::unordered_map<std::string, std::uint32_t> id_map;
  std::vector<std::uint32_t> labels;
  std::vector<double> feat_data;
  std::size_t n_features = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(nodes_in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 3)
      parse_fail(nodes_path, line_no, "expected node_id<TAB>label<TAB>features");
    if (id_map.contains(fields[0]))
      parse_fail(nodes_path, line_no, "duplicate node id '" + fields[0] + "'");
    char* end = nullptr;
    long lbl = std::strtol(fields[1].c_str(), &end, 10);
    if (end == fields[1].c_str() || *end != '\0' || lbl < 0)
      parse_fail(nodes_path, line_no, "bad label '" + fields[1] + "'");
    auto feats = split_fields(fields[2], ',');
    if (id_map.empty()) {
      n_features = feats.size();
    } else if (feats.size() != n_features) {
      fail(Errc::inconsistent_dims,
           nodes_path.string() + ":" + std::to_string(line_no) +
               ": feature arity " + std::to_string(feats.size()) +
               " differs from " + std::to_string(n_features));
    }
    for (const auto& f : feats) {
      end = nullptr;
      double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0' || !std::isfinite(v))
        parse_fail(nodes_path, line_no, "bad feature value '" + f + "'");
      feat_data.push_back(v);
    }
    id_map.emplace(fields[0], static_cast<std::uint32_t>(labels.size()));
    labels.push_back(static_cast<std::uint32_t>(lbl));
  }
  require(!labels.empty(), Errc::parse_error,
          nodes_path.string() + ": no nodes");
  std::size_t n_nodes = labels.size();
  std::size_t n_classes = 0;
  for (std::uint32_t l : labels) n_classes = std::max<std::size_t>(n_classes, l + 1);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  line_no = 0;
  while (std::getline(edges_in, line)) {
    ++line_no;
    line = trim_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line, '\t');
    if (fields.size() != 2)
      parse_fail(edges_path, line_no, "expected src_id<TAB>dst_id");
    auto su = id_map.find(fields[0]);
    auto sv = id_map.find(fields[1]);
    if (su == id_map.end())
      fail(Errc::unknown_node, edges_path.string() + ":" +
                                   std::to_string(line_no) + ": unknown node '" +
                                   fields[0] + "'");
    if (sv == id_map.end())
      fail(Errc::unknown_node, edges_path.string() + ":" +
                                   std::to_string(line_no) + ": unknown node '" +
                                   fields[1] + "'");
    edges.emplace_back(su->second, sv->second);
  }

  Dataset ds;
  ds.graph = build_graph(n_nodes, std::move(edges),
                         DenseMatrix(n_nodes, n_features, std::move(feat_data)),
                         std::move(labels), n_classes);
  if (row_normalize) ds.graph.row_normalize_features();

  auto split_path = dir / "split.tsv";
  if (std::filesystem::exists(split_path)) {
    std::ifstream split_in(split_path);
    require(split_in.good(), Errc::io_error,
            "cannot open " + split_path.string());
    Split split;
    line_no = 0;
    while (std::getline(split_in, line)) {
      ++line_no;
      line = trim_cr(line);
      if (line.empty()) continue;
      auto fields = split_fields(line, '\t');
      if (fields.size() != 2)
        parse_fail(split_path, line_no, "expected node_id<TAB>{train|val|test}");
      auto it = id_map.find(fields[0]);
      if (it == id_map.end())
        fail(Errc::unknown_node, split_path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": unknown node '" + fields[0] + "'");
      if (fields[1] == "train")
        split.train_ids.push_back(it->second);
      else if (fields[1] == "val")
        split.val_ids.push_back(it->second);
      else if (fields[1] == "test")
        split.test_ids.push_back(it->second);
      else
        parse_fail(split_path, line_no, "bad role '" + fields[1] + "'");
    }
    ds.split = std::move(split);
  }
  return ds;
}

void save_dataset(const Graph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "nodes.tsv");
    require(out.good(), Errc::io_error,
            "cannot write " + (dir / "nodes.tsv").string());
    char buf[64];
    for (std::size_t v = 0; v < g.n_nodes; ++v) {
      out << v << '\t' << g.labels[v] << '\t';
      const double* r = g.features.row(v);
      for (std::size_t j = 0; j < g.n_features(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", r[j]);
        if (j) out << ',';
        out << buf;
      }
      out << '\n';
    }
    require(bool(out), Errc::io_error, "write failed: nodes.tsv");
  }
  {
    std::ofstream out(dir / "edges.tsv");
    require(out.good(), Errc::io_error,
            "cannot write " + (dir / "edges.tsv").string());
    for (std::size_t v = 0; v < g.n_nodes; ++v) {
      for (std::uint32_t u : g.neighbors(v)) {
        if (u > v) out << v << '\t' << u << '\n';
      }
    }
    require(bool(out), Errc::io_error, "write failed: edges.tsv");
  }
}

Split make_split(const Graph& g, std::size_t per_class, std::size_t n_test,
                 RngStream& rng) {
  require(per_class >= 1, Errc::bad_param, "make_split: per_class must be >= 1");
  require(n_test + g.n_classes * per_class <= g.n_nodes, Errc::bad_param,
          "make_split: n_test leaves too few nodes");
  std::vector<std::vector<std::uint32_t>> members(g.n_classes);
  for (std::size_t v = 0; v < g.n_nodes; ++v)
    members[g.labels[v]].push_back(static_cast<std::uint32_t>(v));

  Split split;
  std::vector<char> in_train(g.n_nodes, 0);
  for (std::size_t c = 0; c < g.n_classes; ++c) {
    auto& pool = members[c];
    if (pool.size() < per_class)
      fail(Errc::insufficient_class_members,
           "make_split: class " + std::to_string(c) + " has only " +
               std::to_string(pool.size()) + " members, need " +
               std::to_string(per_class));
    for (std::size_t i = 0; i < per_class; ++i) {
      std::size_t j = i + rng.next_below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      split.train_ids.push_back(pool[i]);
      in_train[pool[i]] = 1;
    }
  }
  std::vector<std::uint32_t> rest;
  rest.reserve(g.n_nodes - split.train_ids.size());
  for (std::size_t v = 0; v < g.n_nodes; ++v) {
    if (!in_train[v]) rest.push_back(static_cast<std::uint32_t>(v));
  }
  for (std::size_t i = 0; i < n_test; ++i) {
    std::size_t j = i + rng.next_below(rest.size() - i);
    std::swap(rest[i], rest[j]);
    split.test_ids.push_back(rest[i]);
  }
  return split;
}

Graph synth_citation_graph(std::size_t n, std::size_t n_features,
                           std::size_t n_classes, double homophily,
                           RngStream& rng, double noise, double mean_degree) {
  require(n_classes >= 1 && n >= n_classes, Errc::bad_param,
          "synth_citation_graph: need n >= n_classes >= 1");
  require(homophily >= 0.0 && homophily <= 1.0, Errc::bad_param,
          "synth_citation_graph: homophily must be in [0,1]");
  require(noise >= 0.0 && noise <= 1.0, Errc::bad_param,
          "synth_citation_graph: noise must be in [0,1]");
  require(n_features >= 1, Errc::bad_param,
          "synth_citation_graph: need at least one feature");

  std::vector<std::uint32_t> labels(n);
  for (std::size_t v = 0; v < n; ++v)
    labels[v] = static_cast<std::uint32_t>(v % n_classes);

  // Class prototypes drawn first so the feature pattern only depends on the
  // seed, not on the edge draws.
  std::vector<std::vector<char>> proto(n_classes, std::vector<char>(n_features));
  for (auto& p : proto) {
    for (auto& bit : p) bit = rng.next_bernoulli(0.5) ? 1 : 0;
  }

  double base = mean_degree * static_cast<double>(n_classes) / static_cast<double>(n);
  double p_same = std::min(1.0, base * (n_classes == 1 ? 1.0 : homophily));
  double p_diff =
      n_classes == 1
          ? 0.0
          : std::min(1.0, base * (1.0 - homophily) / static_cast<double>(n_classes - 1));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double p = labels[i] == labels[j] ? p_same : p_diff;
      if (rng.next_bernoulli(p))
        edges.emplace_back(static_cast<std::uint32_t>(i),
                           static_cast<std::uint32_t>(j));
    }
  }

  DenseMatrix features(n, n_features);
  for (std::size_t v = 0; v < n; ++v) {
    double* r = features.row(v);
    const auto& p = proto[labels[v]];
    for (std::size_t f = 0; f < n_features; ++f) {
      bool bit = p[f];
      if (noise > 0.0 && rng.next_bernoulli(noise)) bit = !bit;
      r[f] = bit ? 1.0 : 0.0;
    }
  }
  return build_graph(n, std::move(edges), std::move(features),
                     std::move(labels), n_classes);
}

}  // namespace bgn
