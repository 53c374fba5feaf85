/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef REPRALIGN_H
#define REPRALIGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RaStatus {
  RA_STATUS_OK = 0,
  RA_STATUS_NULL_ARGUMENT = 1,
  RA_STATUS_INVALID_UTF8 = 2,
  RA_STATUS_IO = 3,
  /**
   * Malformed or inconsistent file contents.
   */
  RA_STATUS_FORMAT = 4,
  RA_STATUS_SHAPE = 5,
  /**
   * Zero norms, degenerate inputs, non-orthogonal maps, SVD failure.
   */
  RA_STATUS_NUMERICAL = 6,
  RA_STATUS_INVALID_ARGUMENT = 7,
  /**
   * The output buffer is too small; the required size was reported.
   */
  RA_STATUS_BUFFER_TOO_SMALL = 8,
  RA_STATUS_PANIC = 9,
} RaStatus;

/**
 * Multi-layer representation dump.
 */
typedef struct RaDump RaDump;

/**
 * Word embedding table.
 */
typedef struct RaEmbedding RaEmbedding;

/**
 * Bilingual lexicon.
 */
typedef struct RaLexicon RaLexicon;

/**
 * Orthogonal map between two spaces.
 */
typedef struct RaMap RaMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ra_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *ra_last_error_message(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RaStatus ra_embedding_load(const char *path, bool lowercase, struct RaEmbedding **out);

/**
 * Builds a table from `rows` tokens and a `rows x dim` row-major matrix.
 *
 * # Safety
 * `tokens` must hold `rows` NUL-terminated strings and `data` `rows * dim`
 * floats.
 */
enum RaStatus ra_embedding_new(const char *const *tokens,
                               const float *data,
                               size_t rows,
                               size_t dim,
                               struct RaEmbedding **out);

/**
 * # Safety
 * `table` must come from this library; `path` must be NUL-terminated.
 */
enum RaStatus ra_embedding_save(const struct RaEmbedding *table, const char *path);

/**
 * # Safety
 * `table` must come from this library; `rows` and `dim` may be null.
 */
enum RaStatus ra_embedding_shape(const struct RaEmbedding *table, size_t *rows, size_t *dim);

/**
 * Copies token `index` into `buffer`. `needed` (optional) receives the
 * required size including the terminator.
 *
 * # Safety
 * `buffer` must hold `capacity` bytes.
 */
enum RaStatus ra_embedding_token(const struct RaEmbedding *table,
                                 size_t index,
                                 char *buffer,
                                 size_t capacity,
                                 size_t *needed);

/**
 * Copies the `rows x dim` matrix into `buffer`.
 *
 * # Safety
 * `buffer` must hold `capacity` floats.
 */
enum RaStatus ra_embedding_copy_vectors(const struct RaEmbedding *table,
                                        float *buffer,
                                        size_t capacity);

/**
 * # Safety
 * `table` must come from this library or be null.
 */
void ra_embedding_free(struct RaEmbedding *table);

/**
 * # Safety
 * `path` must be NUL-terminated; the `.ids` sidecar must sit next to it.
 */
enum RaStatus ra_dump_load(const char *path, struct RaDump **out);

/**
 * Builds a dump from `rows` ids and `layers` consecutive `rows x dim`
 * row-major matrices.
 *
 * # Safety
 * `ids` must hold `rows` NUL-terminated strings and `data`
 * `layers * rows * dim` floats.
 */
enum RaStatus ra_dump_new(const char *const *ids,
                          const float *data,
                          size_t layers,
                          size_t rows,
                          size_t dim,
                          struct RaDump **out);

/**
 * # Safety
 * `dump` must come from this library; `path` must be NUL-terminated.
 */
enum RaStatus ra_dump_save(const struct RaDump *dump, const char *path);

/**
 * # Safety
 * `dump` must come from this library; the outputs may be null.
 */
enum RaStatus ra_dump_shape(const struct RaDump *dump, size_t *layers, size_t *rows, size_t *dim);

/**
 * # Safety
 * `buffer` must hold `capacity` bytes.
 */
enum RaStatus ra_dump_id(const struct RaDump *dump,
                         size_t index,
                         char *buffer,
                         size_t capacity,
                         size_t *needed);

/**
 * Copies one `rows x dim` layer into `buffer`.
 *
 * # Safety
 * `buffer` must hold `capacity` floats.
 */
enum RaStatus ra_dump_copy_layer(const struct RaDump *dump,
                                 size_t layer,
                                 float *buffer,
                                 size_t capacity);

/**
 * # Safety
 * `dump` must come from this library or be null.
 */
void ra_dump_free(struct RaDump *dump);

/**
 * Fits the orthogonal `W` minimising `|W X - Y|_F` for `d x n` matrices
 * `X` and `Y`. `residual` (optional) receives the residual.
 *
 * # Safety
 * `x` and `y` must hold `d * n` doubles.
 */
enum RaStatus ra_fit_orthogonal(const double *x,
                                const double *y,
                                size_t d,
                                size_t n,
                                struct RaMap **out,
                                double *residual);

/**
 * Wraps a row-major `d x d` matrix, which must be orthogonal.
 *
 * # Safety
 * `data` must hold `d * d` doubles.
 */
enum RaStatus ra_map_new(const double *data, size_t d, struct RaMap **out);

/**
 * # Safety
 * `path` must be NUL-terminated.
 */
enum RaStatus ra_map_load(const char *path, struct RaMap **out);

/**
 * # Safety
 * `map` must come from this library; `path` must be NUL-terminated.
 */
enum RaStatus ra_map_save(const struct RaMap *map, const char *path);

/**
 * # Safety
 * `map` must come from this library and `dim` must be valid.
 */
enum RaStatus ra_map_dim(const struct RaMap *map, size_t *dim);

/**
 * # Safety
 * `buffer` must hold `capacity` doubles.
 */
enum RaStatus ra_map_copy_matrix(const struct RaMap *map, double *buffer, size_t capacity);

/**
 * Maps `rows` row vectors: `out = rows · Wᵀ`.
 *
 * # Safety
 * `input` and `output` must each hold `rows * d` doubles, `d` being the
 * map dimension.
 */
enum RaStatus ra_map_apply_rows(const struct RaMap *map,
                                const double *input,
                                size_t rows,
                                double *output);

/**
 * # Safety
 * `map` must come from this library or be null.
 */
void ra_map_free(struct RaMap *map);

/**
 * Linear CKA of `n x dx` matrix `x` and `n x dy` matrix `y`.
 *
 * # Safety
 * Buffers must hold `n * dx` and `n * dy` doubles.
 */
enum RaStatus ra_linear_cka(const double *x,
                            size_t dx,
                            const double *y,
                            size_t dy,
                            size_t n,
                            double *value);

/**
 * Iterative normalization of an `n x d` matrix, in place. `iterations`
 * rounds of unit scaling and centering, then a final unit scaling.
 *
 * # Safety
 * `data` must hold `n * d` doubles.
 */
enum RaStatus ra_iterative_normalize(double *data, size_t n, size_t d, size_t iterations);

/**
 * CSLS retrieval of `m` queries against `n` candidates (both `d`
 * columns). Writes `m * top_k` candidate indices and scores, best first;
 * `top_k` must not exceed `n`.
 *
 * # Safety
 * Input buffers must hold `m * d` and `n * d` doubles, outputs
 * `m * top_k` elements each.
 */
enum RaStatus ra_csls_topk(const double *queries,
                           size_t m,
                           const double *candidates,
                           size_t n,
                           size_t d,
                           size_t csls_k,
                           size_t top_k,
                           uint64_t *indices,
                           double *scores);

/**
 * # Safety
 * `path` must be NUL-terminated.
 */
enum RaStatus ra_lexicon_load(const char *path, bool lowercase, struct RaLexicon **out);

/**
 * # Safety
 * `lexicon` must come from this library and `len` must be valid.
 */
enum RaStatus ra_lexicon_len(const struct RaLexicon *lexicon, size_t *len);

/**
 * # Safety
 * `lexicon` must come from this library or be null.
 */
void ra_lexicon_free(struct RaLexicon *lexicon);

/**
 * Code-switches a whitespace-tokenized corpus file with a lexicon.
 * `replaced` (optional) receives the number of replaced tokens.
 *
 * # Safety
 * Paths must be NUL-terminated and `lexicon` must come from this library.
 */
enum RaStatus ra_code_switch_file(const char *input,
                                  const struct RaLexicon *lexicon,
                                  const char *output,
                                  double replace_probability,
                                  double max_changed_fraction,
                                  size_t batch_tokens,
                                  uint64_t seed,
                                  bool uniform_weights,
                                  uint64_t *replaced);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REPRALIGN_H */
