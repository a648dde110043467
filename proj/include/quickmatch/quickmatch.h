/*
 * quickmatch.h - C interface to the QuickMatch / Distributed QuickMatch
 * library.
 *
 * Every object is an opaque handle created by a qm_*_create/load/run call and
 * released with the matching qm_*_free. Functions return a qm_status; on
 * failure qm_last_error() describes the problem for the calling thread.
 * Strings returned through char** are heap allocated and released with
 * qm_string_free.
 */
#ifndef QUICKMATCH_H
#define QUICKMATCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QM_BUILDING_LIBRARY)
#    define QM_API __declspec(dllexport)
#  else
#    define QM_API __declspec(dllimport)
#  endif
#else
#  define QM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qm_status {
  QM_OK = 0,
  QM_ERR_INPUT = 1,      /* bad argument or malformed data */
  QM_ERR_PARSE = 2,      /* file did not parse */
  QM_ERR_VALIDATION = 3, /* not a partition, or an image repeats in a cluster */
  QM_ERR_IO = 4,         /* file could not be read or written */
  QM_ERR_INVARIANT = 5,  /* internal invariant violated (a bug) */
  QM_ERR_INTERNAL = 6    /* anything else, e.g. allocation failure */
} qm_status;

typedef enum qm_kernel {
  QM_KERNEL_GAUSSIAN = 0,
  QM_KERNEL_GAUSSIAN_SQUARED = 1,
  QM_KERNEL_QUADRATIC = 2,
  QM_KERNEL_QUADRATIC_AS_PRINTED = 3
} qm_kernel;

typedef enum qm_seeding { QM_SEEDING_KMEANS = 0, QM_SEEDING_RANDOM = 1 } qm_seeding;

typedef enum qm_contested_sigma {
  QM_CONTESTED_PER_FEATURE = 0,
  QM_CONTESTED_AGENT_MAX = 1
} qm_contested_sigma;

typedef struct qm_features qm_features;
typedef struct qm_clustering qm_clustering;
typedef struct qm_partition qm_partition;
typedef struct qm_drun qm_drun;

/* Message for the last failed call on this thread; never NULL. */
QM_API const char* qm_last_error(void);
QM_API const char* qm_version(void);
QM_API void qm_string_free(char* s);

/* Parses a kernel / seeding name; QM_ERR_INPUT for unknown names. */
QM_API qm_status qm_kernel_from_name(const char* name, qm_kernel* out);
QM_API qm_status qm_seeding_from_name(const char* name, qm_seeding* out);

/* ---- features ---------------------------------------------------------- */

QM_API qm_status qm_features_load(const char* path, qm_features** out);
QM_API qm_status qm_features_parse(const char* text, qm_features** out);
/* `values` holds count * dim doubles, row-major. */
QM_API qm_status qm_features_create(size_t dim, size_t count, const int64_t* images,
                                    const int64_t* indices, const double* values,
                                    qm_features** out);
QM_API qm_status qm_features_save(const qm_features* fs, const char* path);
QM_API void qm_features_free(qm_features* fs);

QM_API size_t qm_features_count(const qm_features* fs);
QM_API size_t qm_features_dim(const qm_features* fs);
QM_API size_t qm_features_image_count(const qm_features* fs);
QM_API qm_status qm_features_id(const qm_features* fs, size_t row, int64_t* image,
                                int64_t* index);
/* Pointer to `dim` doubles, valid while the handle lives. */
QM_API const double* qm_features_vector(const qm_features* fs, size_t row);

QM_API qm_status qm_distance(const double* a, const double* b, size_t dim, double* out);

/* ---- synthetic data ---------------------------------------------------- */

typedef struct qm_synth_config {
  size_t n_clusters;
  size_t per_cluster;
  size_t dim;
  double spread;
  double extent;
  uint64_t seed;
} qm_synth_config;

QM_API void qm_synth_config_default(qm_synth_config* cfg);
/* Blobs on a grid; `truth` receives the ground-truth clustering. */
QM_API qm_status qm_synth_generate(const qm_synth_config* cfg, qm_features** features,
                                   qm_clustering** truth);

/* ---- clustering -------------------------------------------------------- */

typedef struct qm_match_params {
  double rho;
  qm_kernel kernel;
} qm_match_params;

QM_API void qm_match_params_default(qm_match_params* p);
QM_API qm_status qm_match(const qm_features* fs, const qm_match_params* params,
                          qm_clustering** out);
/* Run report JSON for a clustering produced by qm_match. */
QM_API qm_status qm_match_report(const qm_features* fs, const qm_match_params* params,
                                 const qm_clustering* c, double seconds, char** json);

QM_API qm_status qm_clustering_load(const char* path, qm_clustering** out);
/* Ground-truth label file: `image_id feature_id label` per line. */
QM_API qm_status qm_clustering_load_labels(const char* path, qm_clustering** out);
/* Validates against `source` when non-NULL, then writes canonical JSON. */
QM_API qm_status qm_clustering_save(const qm_clustering* c, const qm_features* source,
                                    const char* path);
QM_API qm_status qm_clustering_save_labels(const qm_clustering* c, const char* path);
QM_API qm_status qm_clustering_to_json(const qm_clustering* c, char** json);
QM_API qm_status qm_clustering_validate(const qm_clustering* c, const qm_features* source);
QM_API void qm_clustering_free(qm_clustering* c);

QM_API size_t qm_clustering_cluster_count(const qm_clustering* c);
QM_API size_t qm_clustering_feature_count(const qm_clustering* c);
/* labels[row] = canonical cluster index of each row of `source`. */
QM_API qm_status qm_clustering_labels(const qm_clustering* c, const qm_features* source,
                                      size_t* labels);

/* ---- partition --------------------------------------------------------- */

QM_API qm_status qm_partition_kmeans(const qm_features* fs, size_t agents, uint64_t seed,
                                     qm_partition** out);
QM_API qm_status qm_partition_random(const qm_features* fs, size_t agents, uint64_t seed,
                                     qm_partition** out);
/* `seeds` holds agents * dim doubles, row-major. */
QM_API qm_status qm_partition_from_seeds(const qm_features* fs, size_t agents,
                                         const double* seeds, qm_partition** out);
QM_API qm_status qm_partition_load(const char* path, const qm_features* fs,
                                   qm_partition** out);
QM_API qm_status qm_partition_save(const qm_partition* p, const qm_features* fs,
                                   const char* path);
QM_API void qm_partition_free(qm_partition* p);
QM_API size_t qm_partition_agents(const qm_partition* p);
QM_API size_t qm_partition_owner(const qm_partition* p, size_t row);
/* Seed of agent `a` (qm_features_dim doubles), NULL when out of range. */
QM_API const double* qm_partition_seed(const qm_partition* p, size_t a);

/* Distance from x to the bisector between agents `from` and `to`; x_min
 * (may be NULL) receives the closest bisector point. */
QM_API qm_status qm_boundary_distance(const qm_partition* p, const double* x, size_t dim,
                                      size_t from, size_t to, double* d_min, double* x_min);

/* ---- distributed run --------------------------------------------------- */

typedef struct qm_dmatch_params {
  size_t agents;
  double rho;
  qm_kernel kernel;
  qm_seeding seeding;
  uint64_t seed;
  size_t threads;
  qm_contested_sigma contested_sigma;
} qm_dmatch_params;

QM_API void qm_dmatch_params_default(qm_dmatch_params* p);
QM_API qm_status qm_dmatch(const qm_features* fs, const qm_dmatch_params* params,
                           qm_drun** out);
/* Uses `partition` instead of seeding one. */
QM_API qm_status qm_dmatch_with_partition(const qm_features* fs, const qm_partition* partition,
                                          const qm_dmatch_params* params, qm_drun** out);
QM_API void qm_drun_free(qm_drun* run);

QM_API qm_status qm_drun_clustering(const qm_drun* run, qm_clustering** out);
QM_API qm_status qm_drun_partition(const qm_drun* run, qm_partition** out);
/* Report JSON; `reference` (may be NULL) is the centralized clustering used
 * for split-quality and equivalence metrics. */
QM_API qm_status qm_drun_report(const qm_drun* run, const qm_clustering* reference, char** json);
/* CSV line (no header) in the agent-sweep table layout. */
QM_API qm_status qm_drun_table_row(const qm_drun* run, const qm_clustering* reference,
                                   char** csv_line);
QM_API const char* qm_table_header(void);
QM_API qm_status qm_drun_ledger(const qm_drun* run, int include_vectors, char** json);
QM_API uint64_t qm_drun_ledger_hash(const qm_drun* run);
/* QM_OK when every protocol check passes, QM_ERR_INVARIANT otherwise. */
QM_API qm_status qm_drun_check_ledger(const qm_drun* run);
/* Agent holding a row before (round 0) and after (round 1) transfers. */
QM_API size_t qm_drun_owner(const qm_drun* run, size_t row, int round);
/* Nonzero when the row was flagged contested . */
QM_API int qm_drun_contested(const qm_drun* run, size_t row);

/* ---- evaluation -------------------------------------------------------- */

/* {exact_equal, pairwise_f1, ...} of `pred` against `truth`. */
QM_API qm_status qm_eval_compare(const qm_clustering* truth, const qm_clustering* pred,
                                 char** json);
/* Split quality of `c` under the labeling of `partition`. */
QM_API qm_status qm_eval_split(const qm_clustering* c, const qm_features* fs,
                               const qm_partition* partition, char** json);
/* Digest of a report JSON with its "timing" members removed. */
QM_API qm_status qm_report_digest(const char* json, uint64_t* out);

#ifdef __cplusplus
}
#endif

#endif /* QUICKMATCH_H */
