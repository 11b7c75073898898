#ifndef SFCA_H
#define SFCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call.
 */
typedef enum SfcaStatus {
  Ok = 0,
  NullPointer = 1,
  InvalidArgument = 2,
  NoTransitionFound = 3,
  TooFewScores = 4,
  BufferTooSmall = 5,
  Failure = 6,
} SfcaStatus;

/**
 * Opaque segment grid handle.
 */
typedef struct SfcaGrid SfcaGrid;

/**
 * Opaque fitted model handle.
 */
typedef struct SfcaModel SfcaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sfca_version(void);

/**
 * Static human-readable text for a status code.
 */
const char *sfca_status_message(enum SfcaStatus status);

/**
 * Create a segment grid; returns NULL if the geometry is invalid
 * (segment count must divide 1440 minutes, offset must be in range).
 */
struct SfcaGrid *sfca_grid_new(uintptr_t segments_per_day, uintptr_t day_start_offset);

/**
 * The default 96-segment grid with the 4 pm decode origin.
 */
struct SfcaGrid *sfca_grid_default(void);

/**
 * Release a grid handle. NULL is ignored.
 */
void sfca_grid_free(struct SfcaGrid *grid);

/**
 * Penalized least-squares smoothing. `values` may contain NaN for
 * missing entries; `out` receives `len` smoothed values.
 *
 * # Safety
 * `values` and `out` must point to `len` readable / writable doubles.
 */
enum SfcaStatus sfca_smooth(const double *values,
                            uintptr_t len,
                            double penalty,
                            bool robust,
                            double *out);

/**
 * Wavelet compression to approximation coefficients. `symlet_order`
 * selects the wavelet (3 or 8). On success `*out_len` holds the
 * coefficient count, at most `out_capacity`.
 *
 * # Safety
 * `series` must point to `len` doubles and `out` to `out_capacity`
 * writable doubles.
 */
enum SfcaStatus sfca_wavelet_compress(const double *series,
                                      uintptr_t len,
                                      uint32_t symlet_order,
                                      uintptr_t level,
                                      double *out,
                                      uintptr_t out_capacity,
                                      uintptr_t *out_len);

/**
 * Decode per-segment classification scores into continuous event times
 * in minutes after midnight. `activity` is 0 for sleep, 1 for work;
 * `scores` holds one value per grid segment with NaN for missing.
 *
 * # Safety
 * `scores` must point to one double per grid segment; out pointers must
 * be writable.
 */
enum SfcaStatus sfca_decode(const struct SfcaGrid *grid,
                            uint32_t activity,
                            const double *scores,
                            uintptr_t len,
                            double *out_start,
                            double *out_stop,
                            double *out_duration);

/**
 * Fit a learner on a row-major `rows x cols` design. `family` is the
 * method label accepted by the CLI (`ols`, `ridge`, `lasso`, `r-tree`,
 * `r-tree(bg)`, `r-tree(bs)`, `c-tree(bg)`, `c-tree(bs)`, `logr(ridge)`,
 * `logr(lasso)`, `svm`). Returns NULL on error.
 *
 * # Safety
 * `x` must point to `rows * cols` doubles, `y` to `rows` doubles, and
 * `family` to a NUL-terminated string.
 */
struct SfcaModel *sfca_model_fit(const char *family,
                                 const double *x,
                                 uintptr_t rows,
                                 uintptr_t cols,
                                 const double *y);

/**
 * Predict on a row-major `rows x cols` matrix with the same column
 * count the model was fitted on; `out` receives `rows` values.
 *
 * # Safety
 * `x` must point to `rows * cols` doubles and `out` to `rows` writable
 * doubles.
 */
enum SfcaStatus sfca_model_predict(const struct SfcaModel *model,
                                   const double *x,
                                   uintptr_t rows,
                                   uintptr_t cols,
                                   double *out);

/**
 * Serialize a model to JSON. The returned string must be released with
 * `sfca_string_free`. Returns NULL on error.
 */
char *sfca_model_to_json(const struct SfcaModel *model);

/**
 * Deserialize a model previously produced by `sfca_model_to_json`.
 * Returns NULL on error.
 *
 * # Safety
 * `json` must be a NUL-terminated string.
 */
struct SfcaModel *sfca_model_from_json(const char *json);

/**
 * Release a model handle. NULL is ignored.
 */
void sfca_model_free(struct SfcaModel *model);

/**
 * Release a string returned by this library. NULL is ignored.
 */
void sfca_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFCA_H */
