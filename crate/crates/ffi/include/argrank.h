#ifndef ARGRANK_H
#define ARGRANK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum ArgrankStatus {
  ARGRANK_STATUS_OK = 0,
  ARGRANK_STATUS_NULL_POINTER = 1,
  ARGRANK_STATUS_INVALID_ARGUMENT = 2,
  ARGRANK_STATUS_NOT_FOUND = 3,
  ARGRANK_STATUS_PARSE = 4,
  ARGRANK_STATUS_IO = 5,
  ARGRANK_STATUS_MODEL = 6,
  ARGRANK_STATUS_DUPLICATE = 7,
  ARGRANK_STATUS_TRANSPORT = 8,
  ARGRANK_STATUS_PANIC = 9,
} ArgrankStatus;

/*
 An inverted index with default tokenization and scorer parameters.
 */
typedef struct ArgrankIndex ArgrankIndex;

/*
 A trained ranking model.
 */
typedef struct ArgrankModel ArgrankModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or NULL. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *argrank_last_error(void);

/*
 Length of every feature vector.
 */
size_t argrank_num_features(void);

/*
 Loads a model file.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ArgrankStatus argrank_model_load(const char *path, struct ArgrankModel **out);

/*
 Scores one feature vector of `len` values.

 # Safety
 `model` must come from [`argrank_model_load`], `features` must point to
 `len` doubles and `out` must be valid.
 */
enum ArgrankStatus argrank_model_predict(const struct ArgrankModel *model,
                                         const double *features,
                                         size_t len,
                                         double *out);

/*
 Writes the per-feature split gain into `out`, which must hold
 `len >= argrank_num_features()` doubles.

 # Safety
 `model` must come from [`argrank_model_load`] and `out` must point to
 `len` writable doubles.
 */
enum ArgrankStatus argrank_model_feature_importance(const struct ArgrankModel *model,
                                                    double *out,
                                                    size_t len);

/*
 Number of trees, or 0 for a NULL handle.

 # Safety
 `model` must be NULL or come from [`argrank_model_load`].
 */
size_t argrank_model_num_trees(const struct ArgrankModel *model);

/*
 # Safety
 `model` must be NULL or come from [`argrank_model_load`], and must not
 be used afterwards.
 */
void argrank_model_free(struct ArgrankModel *model);

/*
 Builds an index from a JSON-lines corpus (`doc_id`, `body`).

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ArgrankStatus argrank_index_build_jsonl(const char *path, struct ArgrankIndex **out);

/*
 Loads an index written by `argrank index`.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ArgrankStatus argrank_index_load(const char *path, struct ArgrankIndex **out);

/*
 Number of indexed documents, or 0 for a NULL handle.

 # Safety
 `index` must be NULL or a live index handle.
 */
uint64_t argrank_index_num_docs(const struct ArgrankIndex *index);

/*
 Scores `query` against one document with the named weighting model
 (`bm25`, `tfidf`, `pl2`, `dph`, `hiemstra_lm`, `dirichlet_lm`, `dfic`).

 # Safety
 `index` must be a live index handle, the strings NUL-terminated and `out`
 valid.
 */
enum ArgrankStatus argrank_index_score(const struct ArgrankIndex *index,
                                       const char *scorer,
                                       const char *query,
                                       const char *doc_id,
                                       double *out);

/*
 # Safety
 `index` must be NULL or a live index handle, and must not be used
 afterwards.
 */
void argrank_index_free(struct ArgrankIndex *index);

/*
 NDCG@k of grades listed in ranked order.

 # Safety
 `grades` must point to `len` values and `out` must be valid.
 */
enum ArgrankStatus argrank_ndcg_at_k(const uint32_t *grades, size_t len, size_t k, double *out);

/*
 Maps an Antique grade (1..=4) onto 0..=2.

 # Safety
 `out` must be valid.
 */
enum ArgrankStatus argrank_map_antique_grade(int64_t grade, uint8_t *out);

/*
 LambdaRank gradients and hessians for one query group.

 # Safety
 `scores` and `grades` must point to `len` values; `lambdas` and
 `hessians` to `len` writable doubles.
 */
enum ArgrankStatus argrank_compute_lambdas(const double *scores,
                                           const uint32_t *grades,
                                           size_t len,
                                           size_t k,
                                           double sigma,
                                           double *lambdas,
                                           double *hessians);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARGRANK_H */
