/* bgn.h - C API for the binarized graph network engine.
 *
 * The library trains and runs multi-head graph attention models whose
 * weights, hidden representations and attention coefficients can be
 * binarized, with xnor/popcount and masked-summation inference kernels,
 * plus a binarized graph-matching case study.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Every fallible function returns a bgn_status; on failure a thread-local
 * message is available via bgn_last_error(). Out-parameters are untouched
 * on failure. Handles are not thread-safe for concurrent mutation; frozen
 * models may be evaluated from multiple threads.
 */

#ifndef BGN_H
#define BGN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) || defined(__CYGWIN__)
#define BGN_API __declspec(dllexport)
#else
#define BGN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* ---- status codes ---- */

typedef enum bgn_status {
  BGN_OK = 0,
  BGN_E_INVALID_ARG = 1,
  BGN_E_ENTRY_NOT_BINARY = 2,
  BGN_E_DIM_MISMATCH = 3,
  BGN_E_NON_FINITE = 4,
  BGN_E_PARSE = 5,
  BGN_E_INCONSISTENT_DIMS = 6,
  BGN_E_UNKNOWN_NODE = 7,
  BGN_E_INSUFFICIENT_CLASS_MEMBERS = 8,
  BGN_E_BAD_PARAM = 9,
  BGN_E_INDEX_OUT_OF_RANGE = 10,
  BGN_E_STALE_CACHE = 11,
  BGN_E_DIVERGED_LOSS = 12,
  BGN_E_INFEASIBLE_SUBSTITUTION = 13,
  BGN_E_UNINITIALIZED_STATE = 14,
  BGN_E_IO = 15,
  BGN_E_INTERNAL = 16,
} bgn_status;

BGN_API const char* bgn_status_string(bgn_status status);
/* Thread-local detail message for the most recent failure on this thread. */
BGN_API const char* bgn_last_error(void);
BGN_API void bgn_version(int* major, int* minor, int* patch);

/* ---- graphs and splits ---- */

typedef struct bgn_graph bgn_graph;
typedef struct bgn_split bgn_split;

/* Loads nodes.tsv / edges.tsv (and split.tsv when present) from dir.
 * row_normalize scales feature rows by their L1 norm. When the directory
 * has a split.tsv and out_split is non-NULL, the split is returned too
 * (otherwise *out_split is set to NULL). */
BGN_API bgn_status bgn_graph_load(const char* dir, int row_normalize,
                                  bgn_graph** out_graph,
                                  bgn_split** out_split);
BGN_API bgn_status bgn_graph_save(const bgn_graph* g, const char* dir);
/* Planted-partition synthetic citation graph (test fixture). */
BGN_API bgn_status bgn_graph_synth(uint64_t n_nodes, uint64_t n_features,
                                   uint64_t n_classes, double homophily,
                                   double noise, double mean_degree,
                                   uint64_t seed, int row_normalize,
                                   bgn_graph** out_graph);
BGN_API void bgn_graph_free(bgn_graph* g);

BGN_API uint64_t bgn_graph_nodes(const bgn_graph* g);
BGN_API uint64_t bgn_graph_edges(const bgn_graph* g);
BGN_API uint64_t bgn_graph_features(const bgn_graph* g);
BGN_API uint64_t bgn_graph_classes(const bgn_graph* g);

/* per_class training nodes from every class plus n_test test nodes. */
BGN_API bgn_status bgn_split_make(const bgn_graph* g, uint64_t per_class,
                                  uint64_t n_test, uint64_t seed,
                                  bgn_split** out_split);
BGN_API void bgn_split_free(bgn_split* s);
/* which: 0 = train, 1 = val, 2 = test. */
BGN_API uint64_t bgn_split_size(const bgn_split* s, int which);

/* ---- models ---- */

typedef struct bgn_model bgn_model;

enum {
  BGN_LEVEL_NONE = 0,
  BGN_LEVEL_W = 1,
  BGN_LEVEL_E = 2,
  BGN_LEVEL_WE = 3,
  BGN_LEVEL_WEC = 4,
};
enum { BGN_EST_STE = 0, BGN_EST_REINFORCE = 1 };
enum { BGN_SCORE_ADDITIVE = 0, BGN_SCORE_DOT = 1 };
enum { BGN_SCALE_UNIT = 0, BGN_SCALE_INV_SQRT_DIM = 1 };

typedef struct bgn_model_config {
  uint32_t n_layers;   /* includes the output layer */
  uint32_t heads;
  uint32_t head_dim;
  int32_t level;       /* BGN_LEVEL_* */
  int32_t estimator;   /* BGN_EST_* */
  int32_t scoring;     /* BGN_SCORE_* */
  int32_t center_coefficients;
  int32_t logit_scale; /* BGN_SCALE_* */
  int32_t real_output_layer;
  int32_t avg_output_heads;
  double ste_clip;     /* <= 0 disables the saturation clip */
} bgn_model_config;

BGN_API void bgn_model_config_init(bgn_model_config* cfg);
BGN_API bgn_status bgn_model_create(const bgn_graph* g,
                                    const bgn_model_config* cfg,
                                    uint64_t seed, bgn_model** out_model);
BGN_API bgn_status bgn_model_save(const bgn_model* m, const char* path);
BGN_API bgn_status bgn_model_load(const char* path, bgn_model** out_model);
BGN_API void bgn_model_free(bgn_model* m);

/* ---- training and evaluation ---- */

typedef struct bgn_train_options {
  double lr;
  double beta1, beta2, eps;
  uint32_t epochs;
  uint32_t patience; /* early stopping on val accuracy when a val split exists */
  uint64_t seed;
} bgn_train_options;

typedef struct bgn_history bgn_history;

BGN_API void bgn_train_options_init(bgn_train_options* opts);
BGN_API bgn_status bgn_train(bgn_model* m, const bgn_graph* g,
                             const bgn_split* split,
                             const bgn_train_options* opts,
                             bgn_history** out_history);
BGN_API uint64_t bgn_history_length(const bgn_history* h);
/* val_acc is NaN when no validation split was given. */
BGN_API bgn_status bgn_history_row(const bgn_history* h, uint64_t epoch,
                                   double* loss, double* train_acc,
                                   double* val_acc);
BGN_API void bgn_history_free(bgn_history* h);

/* Accuracy over one part of the split (which: 0 train / 1 val / 2 test).
 * An empty id list is vacuously accurate (1.0). */
BGN_API bgn_status bgn_evaluate(const bgn_model* m, const bgn_graph* g,
                                const bgn_split* split, int which,
                                double* out_accuracy);

/* ---- inference benchmark ---- */

typedef struct bgn_bench_report {
  double median_seconds;
  double min_seconds;
  double max_seconds;
  uint64_t trials;
  uint64_t weight_param_bits;
  uint64_t scoring_param_bits;
  uint64_t embedding_bits;
  uint64_t coefficient_bits;
  double accuracy;          /* NaN when no split was supplied */
  double speedup_vs_ref;    /* NaN until bgn_bench_set_reference */
  double weight_space_ratio;
  double embed_space_ratio;
  double coeff_space_ratio;
} bgn_bench_report;

/* Median full-graph inference wall clock over `trials` runs after `warmup`
 * discarded runs. split may be NULL (accuracy comes out NaN). */
BGN_API bgn_status bgn_bench_inference(const bgn_model* m, const bgn_graph* g,
                                       const bgn_split* split, uint32_t trials,
                                       uint32_t warmup,
                                       bgn_bench_report* out_report);
/* Fills the ratio fields of *report from the raw fields of both reports. */
BGN_API bgn_status bgn_bench_set_reference(bgn_bench_report* report,
                                           const bgn_bench_report* reference);

/* ---- graph matching case study ---- */

typedef struct bgn_matcher bgn_matcher;

typedef struct bgn_gmn_config {
  uint32_t nodes;       /* nodes per generated graph */
  double edge_prob;     /* binomial edge probability */
  uint32_t k_pos;       /* edges substituted for the positive partner */
  uint32_t k_neg;       /* edges substituted for the negative partner */
  uint32_t node_dim;
  uint32_t graph_dim;
  uint32_t rounds;      /* propagation rounds */
  int32_t binary;       /* 1: binary codes + hamming; 0: reference mode */
  int32_t balance_codes;
} bgn_gmn_config;

BGN_API void bgn_gmn_config_init(bgn_gmn_config* cfg);
BGN_API bgn_status bgn_matcher_create(const bgn_gmn_config* cfg, uint64_t seed,
                                      bgn_matcher** out_matcher);
BGN_API bgn_status bgn_matcher_train(bgn_matcher* m, uint32_t steps,
                                     double margin, double lr, uint64_t seed,
                                     double* out_tail_loss);
BGN_API bgn_status bgn_matcher_evaluate(const bgn_matcher* m, uint32_t n_pairs,
                                        uint32_t n_triplets, uint64_t seed,
                                        double* out_pair_auc,
                                        double* out_triplet_acc,
                                        double* out_median_pair_seconds);
BGN_API void bgn_matcher_free(bgn_matcher* m);

/* All-pairs node scoring kernel timing at the given size: packed
 * xnor/popcount versus real-valued dots. */
BGN_API bgn_status bgn_gmn_bench_scoring(uint32_t nodes, uint32_t dim,
                                         uint32_t trials, uint64_t seed,
                                         double* out_binary_seconds,
                                         double* out_real_seconds);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BGN_H */
