#include "bgn/bgn.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "core/bgat.hpp"
#include "core/common.hpp"
#include "core/gmn.hpp"
#include "core/graph.hpp"
#include "core/train.hpp"

namespace {

thread_local std::string g_last_error;

bgn_status status_of(bgn::Errc c) {
  using bgn::Errc;
  switch (c) {
    case Errc::ok: return BGN_OK;
    case Errc::invalid_arg: return BGN_E_INVALID_ARG;
    case Errc::entry_not_binary: return BGN_E_ENTRY_NOT_BINARY;
    case Errc::dim_mismatch: return BGN_E_DIM_MISMATCH;
    case Errc::non_finite: return BGN_E_NON_FINITE;
    case Errc::parse_error: return BGN_E_PARSE;
    case Errc::inconsistent_dims: return BGN_E_INCONSISTENT_DIMS;
    case Errc::unknown_node: return BGN_E_UNKNOWN_NODE;
    case Errc::insufficient_class_members:
      return BGN_E_INSUFFICIENT_CLASS_MEMBERS;
    case Errc::bad_param: return BGN_E_BAD_PARAM;
    case Errc::index_out_of_range: return BGN_E_INDEX_OUT_OF_RANGE;
    case Errc::stale_cache: return BGN_E_STALE_CACHE;
    case Errc::diverged_loss: return BGN_E_DIVERGED_LOSS;
    case Errc::infeasible_substitution: return BGN_E_INFEASIBLE_SUBSTITUTION;
    case Errc::uninitialized_state: return BGN_E_UNINITIALIZED_STATE;
    case Errc::io_error: return BGN_E_IO;
    case Errc::internal: return BGN_E_INTERNAL;
  }
  return BGN_E_INTERNAL;
}

template <typename Fn>
bgn_status guarded(Fn&& fn) {
  try {
    fn();
    return BGN_OK;
  } catch (const bgn::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BGN_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BGN_E_INTERNAL;
  }
}

bgn_status invalid(const char* msg) {
  g_last_error = msg;
  return BGN_E_INVALID_ARG;
}

}  // namespace

struct bgn_graph {
  bgn::Graph g;
};
struct bgn_split {
  bgn::Split s;
};
struct bgn_model {
  bgn::Model m;
};
struct bgn_history {
  bgn::TrainHistory h;
};
struct bgn_matcher {
  bgn::gmn::Matcher m;
  bgn::gmn::TripletConfig triplets;
};

extern "C" {

const char* bgn_status_string(bgn_status status) {
  switch (status) {
    case BGN_OK: return "ok";
    case BGN_E_INVALID_ARG: return "invalid argument";
    case BGN_E_ENTRY_NOT_BINARY: return "entry not binary";
    case BGN_E_DIM_MISMATCH: return "dimension mismatch";
    case BGN_E_NON_FINITE: return "non-finite value";
    case BGN_E_PARSE: return "parse error";
    case BGN_E_INCONSISTENT_DIMS: return "inconsistent dimensions";
    case BGN_E_UNKNOWN_NODE: return "unknown node";
    case BGN_E_INSUFFICIENT_CLASS_MEMBERS:
      return "insufficient class members";
    case BGN_E_BAD_PARAM: return "bad parameter";
    case BGN_E_INDEX_OUT_OF_RANGE: return "index out of range";
    case BGN_E_STALE_CACHE: return "stale forward cache";
    case BGN_E_DIVERGED_LOSS: return "loss diverged";
    case BGN_E_INFEASIBLE_SUBSTITUTION: return "infeasible edge substitution";
    case BGN_E_UNINITIALIZED_STATE: return "uninitialized estimator state";
    case BGN_E_IO: return "i/o error";
    case BGN_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bgn_last_error(void) { return g_last_error.c_str(); }

void bgn_version(int* major, int* minor, int* patch) {
  if (major) *major = 0;
  if (minor) *minor = 1;
  if (patch) *patch = 0;
}

bgn_status bgn_graph_load(const char* dir, int row_normalize,
                          bgn_graph** out_graph, bgn_split** out_split) {
  if (!dir || !out_graph) return invalid("bgn_graph_load: NULL argument");
  return guarded([&] {
    bgn::Dataset ds = bgn::load_dataset(dir, row_normalize != 0);
    if (out_split) {
      *out_split = ds.split ? new bgn_split{std::move(*ds.split)} : nullptr;
    }
    *out_graph = new bgn_graph{std::move(ds.graph)};
  });
}

bgn_status bgn_graph_save(const bgn_graph* g, const char* dir) {
  if (!g || !dir) return invalid("bgn_graph_save: NULL argument");
  return guarded([&] { bgn::save_dataset(g->g, dir); });
}

bgn_status bgn_graph_synth(uint64_t n_nodes, uint64_t n_features,
                           uint64_t n_classes, double homophily, double noise,
                           double mean_degree, uint64_t seed,
                           int row_normalize, bgn_graph** out_graph) {
  if (!out_graph) return invalid("bgn_graph_synth: NULL out_graph");
  return guarded([&] {
    bgn::RngStream rng(seed);
    bgn::Graph g = bgn::synth_citation_graph(n_nodes, n_features, n_classes,
                                             homophily, rng, noise,
                                             mean_degree);
    if (row_normalize) g.row_normalize_features();
    *out_graph = new bgn_graph{std::move(g)};
  });
}

void bgn_graph_free(bgn_graph* g) { delete g; }

uint64_t bgn_graph_nodes(const bgn_graph* g) { return g ? g->g.n_nodes : 0; }
uint64_t bgn_graph_edges(const bgn_graph* g) { return g ? g->g.n_edges : 0; }
uint64_t bgn_graph_features(const bgn_graph* g) {
  return g ? g->g.n_features() : 0;
}
uint64_t bgn_graph_classes(const bgn_graph* g) {
  return g ? g->g.n_classes : 0;
}

bgn_status bgn_split_make(const bgn_graph* g, uint64_t per_class,
                          uint64_t n_test, uint64_t seed,
                          bgn_split** out_split) {
  if (!g || !out_split) return invalid("bgn_split_make: NULL argument");
  return guarded([&] {
    bgn::RngStream rng(seed);
    *out_split = new bgn_split{bgn::make_split(g->g, per_class, n_test, rng)};
  });
}

void bgn_split_free(bgn_split* s) { delete s; }

uint64_t bgn_split_size(const bgn_split* s, int which) {
  if (!s) return 0;
  switch (which) {
    case 0: return s->s.train_ids.size();
    case 1: return s->s.val_ids.size();
    case 2: return s->s.test_ids.size();
    default: return 0;
  }
}

void bgn_model_config_init(bgn_model_config* cfg) {
  if (!cfg) return;
  bgn::ModelConfig d;
  cfg->n_layers = static_cast<uint32_t>(d.n_layers);
  cfg->heads = static_cast<uint32_t>(d.heads);
  cfg->head_dim = static_cast<uint32_t>(d.head_dim);
  cfg->level = BGN_LEVEL_NONE;
  cfg->estimator = BGN_EST_STE;
  cfg->scoring = BGN_SCORE_ADDITIVE;
  cfg->center_coefficients = d.center_coefficients ? 1 : 0;
  cfg->logit_scale = BGN_SCALE_INV_SQRT_DIM;
  cfg->real_output_layer = d.real_output_layer ? 1 : 0;
  cfg->avg_output_heads = d.avg_output_heads ? 1 : 0;
  cfg->ste_clip = d.ste_clip;
}

namespace {

bgn::ModelConfig to_core(const bgn_model_config& c) {
  bgn::ModelConfig out;
  out.n_layers = c.n_layers;
  out.heads = c.heads;
  out.head_dim = c.head_dim;
  bgn::require(c.level >= BGN_LEVEL_NONE && c.level <= BGN_LEVEL_WEC,
               bgn::Errc::bad_param, "config: bad level");
  out.level = static_cast<bgn::Level>(c.level);
  bgn::require(c.estimator == BGN_EST_STE || c.estimator == BGN_EST_REINFORCE,
               bgn::Errc::bad_param, "config: bad estimator");
  out.estimator = static_cast<bgn::Estimator>(c.estimator);
  bgn::require(c.scoring == BGN_SCORE_ADDITIVE || c.scoring == BGN_SCORE_DOT,
               bgn::Errc::bad_param, "config: bad scoring");
  out.scoring = static_cast<bgn::Scoring>(c.scoring);
  out.center_coefficients = c.center_coefficients != 0;
  bgn::require(c.logit_scale == BGN_SCALE_UNIT ||
                   c.logit_scale == BGN_SCALE_INV_SQRT_DIM,
               bgn::Errc::bad_param, "config: bad logit scale");
  out.logit_scale = static_cast<bgn::LogitScale>(c.logit_scale);
  out.real_output_layer = c.real_output_layer != 0;
  out.avg_output_heads = c.avg_output_heads != 0;
  out.ste_clip = c.ste_clip;
  return out;
}

}  // namespace

bgn_status bgn_model_create(const bgn_graph* g, const bgn_model_config* cfg,
                            uint64_t seed, bgn_model** out_model) {
  if (!g || !cfg || !out_model) return invalid("bgn_model_create: NULL argument");
  return guarded([&] {
    bgn::RngStream rng(seed);
    *out_model = new bgn_model{
        bgn::Model(to_core(*cfg), g->g.n_features(), g->g.n_classes, rng)};
  });
}

bgn_status bgn_model_save(const bgn_model* m, const char* path) {
  if (!m || !path) return invalid("bgn_model_save: NULL argument");
  return guarded([&] { m->m.save_file(path); });
}

bgn_status bgn_model_load(const char* path, bgn_model** out_model) {
  if (!path || !out_model) return invalid("bgn_model_load: NULL argument");
  return guarded([&] {
    *out_model = new bgn_model{bgn::Model::load_file(path)};
  });
}

void bgn_model_free(bgn_model* m) { delete m; }

void bgn_train_options_init(bgn_train_options* opts) {
  if (!opts) return;
  bgn::TrainOptions d;
  opts->lr = d.lr;
  opts->beta1 = d.beta1;
  opts->beta2 = d.beta2;
  opts->eps = d.eps;
  opts->epochs = static_cast<uint32_t>(d.epochs);
  opts->patience = static_cast<uint32_t>(d.patience);
  opts->seed = d.seed;
}

bgn_status bgn_train(bgn_model* m, const bgn_graph* g, const bgn_split* split,
                     const bgn_train_options* opts, bgn_history** out_history) {
  if (!m || !g || !split || !opts) return invalid("bgn_train: NULL argument");
  return guarded([&] {
    bgn::TrainOptions to;
    to.lr = opts->lr;
    to.beta1 = opts->beta1;
    to.beta2 = opts->beta2;
    to.eps = opts->eps;
    to.epochs = opts->epochs;
    to.patience = opts->patience;
    to.seed = opts->seed;
    bgn::TrainHistory hist = bgn::train(m->m, g->g, split->s, to);
    if (out_history) *out_history = new bgn_history{std::move(hist)};
  });
}

uint64_t bgn_history_length(const bgn_history* h) {
  return h ? h->h.size() : 0;
}

bgn_status bgn_history_row(const bgn_history* h, uint64_t epoch, double* loss,
                           double* train_acc, double* val_acc) {
  if (!h) return invalid("bgn_history_row: NULL history");
  if (epoch >= h->h.size()) {
    g_last_error = "bgn_history_row: epoch out of range";
    return BGN_E_INDEX_OUT_OF_RANGE;
  }
  const bgn::EpochStats& s = h->h[epoch];
  if (loss) *loss = s.loss;
  if (train_acc) *train_acc = s.train_acc;
  if (val_acc) *val_acc = s.val_acc;
  return BGN_OK;
}

void bgn_history_free(bgn_history* h) { delete h; }

bgn_status bgn_evaluate(const bgn_model* m, const bgn_graph* g,
                        const bgn_split* split, int which,
                        double* out_accuracy) {
  if (!m || !g || !split || !out_accuracy)
    return invalid("bgn_evaluate: NULL argument");
  if (which < 0 || which > 2) return invalid("bgn_evaluate: bad which");
  return guarded([&] {
    const auto& ids = which == 0   ? split->s.train_ids
                      : which == 1 ? split->s.val_ids
                                   : split->s.test_ids;
    *out_accuracy = bgn::evaluate(m->m, g->g, ids);
  });
}

bgn_status bgn_bench_inference(const bgn_model* m, const bgn_graph* g,
                               const bgn_split* split, uint32_t trials,
                               uint32_t warmup, bgn_bench_report* out_report) {
  if (!m || !g || !out_report) return invalid("bgn_bench_inference: NULL argument");
  return guarded([&] {
    std::span<const std::uint32_t> ids;
    if (split) ids = split->s.test_ids;
    bgn::BenchReport r = bgn::bench_inference(m->m, g->g, ids, trials, warmup);
    bgn_bench_report out{};
    out.median_seconds = r.median_seconds;
    out.min_seconds = r.min_seconds;
    out.max_seconds = r.max_seconds;
    out.trials = r.trials;
    out.weight_param_bits = r.bits.weight_param_bits;
    out.scoring_param_bits = r.bits.scoring_param_bits;
    out.embedding_bits = r.bits.embedding_bits;
    out.coefficient_bits = r.bits.coefficient_bits;
    out.accuracy = r.accuracy;
    out.speedup_vs_ref = std::numeric_limits<double>::quiet_NaN();
    out.weight_space_ratio = std::numeric_limits<double>::quiet_NaN();
    out.embed_space_ratio = std::numeric_limits<double>::quiet_NaN();
    out.coeff_space_ratio = std::numeric_limits<double>::quiet_NaN();
    *out_report = out;
  });
}

bgn_status bgn_bench_set_reference(bgn_bench_report* report,
                                   const bgn_bench_report* reference) {
  if (!report || !reference)
    return invalid("bgn_bench_set_reference: NULL argument");
  if (report->median_seconds <= 0.0 || report->weight_param_bits == 0)
    return invalid("bgn_bench_set_reference: report has no measurements");
  report->speedup_vs_ref = reference->median_seconds / report->median_seconds;
  report->weight_space_ratio =
      static_cast<double>(reference->weight_param_bits) /
      static_cast<double>(report->weight_param_bits);
  report->embed_space_ratio =
      report->embedding_bits == 0
          ? std::numeric_limits<double>::quiet_NaN()
          : static_cast<double>(reference->embedding_bits) /
                static_cast<double>(report->embedding_bits);
  report->coeff_space_ratio =
      static_cast<double>(reference->coefficient_bits) /
      static_cast<double>(report->coefficient_bits);
  return BGN_OK;
}

void bgn_gmn_config_init(bgn_gmn_config* cfg) {
  if (!cfg) return;
  bgn::gmn::TripletConfig t;
  bgn::gmn::MatcherConfig m;
  cfg->nodes = static_cast<uint32_t>(t.nodes);
  cfg->edge_prob = t.edge_prob;
  cfg->k_pos = static_cast<uint32_t>(t.k_pos);
  cfg->k_neg = static_cast<uint32_t>(t.k_neg);
  cfg->node_dim = static_cast<uint32_t>(m.node_dim);
  cfg->graph_dim = static_cast<uint32_t>(m.graph_dim);
  cfg->rounds = static_cast<uint32_t>(m.rounds);
  cfg->binary = m.binary ? 1 : 0;
  cfg->balance_codes = m.balance_codes ? 1 : 0;
}

bgn_status bgn_matcher_create(const bgn_gmn_config* cfg, uint64_t seed,
                              bgn_matcher** out_matcher) {
  if (!cfg || !out_matcher) return invalid("bgn_matcher_create: NULL argument");
  return guarded([&] {
    bgn::gmn::TripletConfig tc;
    tc.nodes = cfg->nodes;
    tc.edge_prob = cfg->edge_prob;
    tc.k_pos = cfg->k_pos;
    tc.k_neg = cfg->k_neg;
    tc.validate();
    bgn::gmn::MatcherConfig mc;
    mc.node_dim = cfg->node_dim;
    mc.graph_dim = cfg->graph_dim;
    mc.rounds = cfg->rounds;
    mc.binary = cfg->binary != 0;
    mc.balance_codes = cfg->balance_codes != 0;
    bgn::RngStream rng(seed);
    *out_matcher = new bgn_matcher{bgn::gmn::Matcher(mc, rng), tc};
  });
}

bgn_status bgn_matcher_train(bgn_matcher* m, uint32_t steps, double margin,
                             double lr, uint64_t seed, double* out_tail_loss) {
  if (!m) return invalid("bgn_matcher_train: NULL matcher");
  return guarded([&] {
    bgn::gmn::MatcherTrainOptions opts;
    opts.steps = steps;
    opts.margin = margin;
    opts.lr = lr;
    bgn::RngStream rng(seed);
    double tail = bgn::gmn::train_matcher(m->m, m->triplets, opts, rng);
    if (out_tail_loss) *out_tail_loss = tail;
  });
}

bgn_status bgn_matcher_evaluate(const bgn_matcher* m, uint32_t n_pairs,
                                uint32_t n_triplets, uint64_t seed,
                                double* out_pair_auc, double* out_triplet_acc,
                                double* out_median_pair_seconds) {
  if (!m) return invalid("bgn_matcher_evaluate: NULL matcher");
  return guarded([&] {
    bgn::RngStream rng(seed);
    bgn::gmn::MatcherEvalResult r =
        bgn::gmn::eval_matcher(m->m, m->triplets, n_pairs, n_triplets, rng);
    if (out_pair_auc) *out_pair_auc = r.pair_auc;
    if (out_triplet_acc) *out_triplet_acc = r.triplet_acc;
    if (out_median_pair_seconds) *out_median_pair_seconds = r.median_pair_seconds;
  });
}

void bgn_matcher_free(bgn_matcher* m) { delete m; }

bgn_status bgn_gmn_bench_scoring(uint32_t nodes, uint32_t dim, uint32_t trials,
                                 uint64_t seed, double* out_binary_seconds,
                                 double* out_real_seconds) {
  return guarded([&] {
    bgn::RngStream rng(seed);
    bgn::gmn::ScoringBench b =
        bgn::gmn::bench_pairwise_scoring(nodes, dim, trials, rng);
    if (out_binary_seconds) *out_binary_seconds = b.binary_seconds;
    if (out_real_seconds) *out_real_seconds = b.real_seconds;
  });
}

}  // extern "C"
