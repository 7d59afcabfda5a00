#ifndef TEXTATTR_H
#define TEXTATTR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TaStatus {
  TA_STATUS_OK = 0,
  TA_STATUS_NULL_POINTER = 1,
  TA_STATUS_INVALID_INPUT = 2,
  TA_STATUS_CONFIG = 3,
  TA_STATUS_OUT_OF_RANGE = 4,
  TA_STATUS_SINGULAR = 5,
  TA_STATUS_COST_GUARD = 6,
  TA_STATUS_MISMATCH = 7,
  TA_STATUS_NUMERICAL = 8,
  TA_STATUS_IO = 9,
  TA_STATUS_PARSE = 10,
  TA_STATUS_BUFFER_TOO_SMALL = 11,
  TA_STATUS_PANIC = 12,
} TaStatus;

/**
 * Opaque trained or initialized classifier.
 */
typedef struct TaModel TaModel;

/**
 * Opaque vocabulary.
 */
typedef struct TaVocab TaVocab;

/**
 * Attribution result header written next to the value buffer.
 */
typedef struct TaAttribution {
  /**
   * Score with every feature masked.
   */
  double phi0;
  size_t target_class;
  size_t num_features;
} TaAttribution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ta_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ta_version(void);

/**
 * Freshly initialized model with parameters drawn from `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TaStatus ta_model_init(size_t vocab_size,
                            size_t embed_dim,
                            size_t hidden,
                            size_t classes,
                            uint64_t seed,
                            struct TaModel **out);

/**
 * Loads a JSON checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum TaStatus ta_model_load(const char *path, struct TaModel **out);

/**
 * Writes a JSON checkpoint.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum TaStatus ta_model_save(const struct TaModel *model, const char *path);

/**
 * Copy of `model` with the classification head re-drawn from `seed`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid handle slot.
 */
enum TaStatus ta_model_randomize_head(const struct TaModel *model,
                                      uint64_t seed,
                                      struct TaModel **out);

/**
 * Releases a model handle. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a handle not freed before.
 */
void ta_model_free(struct TaModel *model);

/**
 * Number of classes, or 0 for a NULL handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t ta_model_num_classes(const struct TaModel *model);

/**
 * Class scores for a token sequence; writes K scores and the predicted class.
 *
 * # Safety
 * `tokens` must hold `len` ids, `scores` must hold `scores_cap` doubles and
 * `predicted` must be writable (or NULL to skip it).
 */
enum TaStatus ta_model_scores(const struct TaModel *model,
                              const uint32_t *tokens,
                              size_t len,
                              double *scores,
                              size_t scores_cap,
                              size_t *predicted);

/**
 * Loads a vocabulary file written by the pipeline.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum TaStatus ta_vocab_load(const char *path, struct TaVocab **out);

/**
 * Releases a vocabulary handle. NULL is ignored.
 *
 * # Safety
 * `vocab` must be NULL or a handle not freed before.
 */
void ta_vocab_free(struct TaVocab *vocab);

/**
 * Tokenizes UTF-8 text; `*out_len` receives the token count even when the
 * buffer is too small.
 *
 * # Safety
 * `vocab` must be a live handle, `text` NUL-terminated, `tokens` writable
 * for `cap` ids and `out_len` writable.
 */
enum TaStatus ta_tokenize(const struct TaVocab *vocab,
                          const char *text,
                          uint32_t *tokens,
                          size_t cap,
                          size_t *out_len);

/**
 * KernelSHAP for the predicted class over the given groups (or tokens when
 * `group_ends` is NULL). `budget` 0 selects 2M + 2048.
 *
 * # Safety
 * Pointers must be valid for the given lengths; `values` holds `cap` doubles.
 */
enum TaStatus ta_kernel_shap(const struct TaModel *model,
                             const uint32_t *tokens,
                             size_t len,
                             const size_t *group_ends,
                             size_t n_groups,
                             size_t budget,
                             uint64_t seed,
                             double *values,
                             size_t cap,
                             struct TaAttribution *header);

/**
 * Exact Shapley values (at most 20 features).
 *
 * # Safety
 * Pointers must be valid for the given lengths; `values` holds `cap` doubles.
 */
enum TaStatus ta_exact_shapley(const struct TaModel *model,
                               const uint32_t *tokens,
                               size_t len,
                               const size_t *group_ends,
                               size_t n_groups,
                               double *values,
                               size_t cap,
                               struct TaAttribution *header);

/**
 * Token-level integrated gradients from the all-UNK baseline.
 *
 * # Safety
 * `tokens` holds `len` ids; `values` holds `cap` doubles.
 */
enum TaStatus ta_integrated_gradients(const struct TaModel *model,
                                      const uint32_t *tokens,
                                      size_t len,
                                      size_t steps,
                                      double *values,
                                      size_t cap,
                                      struct TaAttribution *header);

/**
 * Jaccard@K% between two attribution vectors of equal length `m`.
 *
 * # Safety
 * `a` and `b` hold `m` doubles; `out` is writable.
 */
enum TaStatus ta_jaccard_at_k(const double *a,
                              const double *b,
                              size_t m,
                              double k_percent,
                              double *out);

/**
 * Mutual information between true and annotated labels, in bits.
 *
 * # Safety
 * `y` and `y_h` hold `n` labels; `out` is writable.
 */
enum TaStatus ta_mutual_information(const size_t *y, const size_t *y_h, size_t n, double *out);

/**
 * Information transfer rate in bits per second.
 *
 * # Safety
 * `y`, `y_h` and `times` hold `n` values; `out` is writable.
 */
enum TaStatus ta_itr(const size_t *y,
                     const size_t *y_h,
                     const double *times,
                     size_t n,
                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEXTATTR_H */
