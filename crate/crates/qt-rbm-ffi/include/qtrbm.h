#ifndef QTRBM_H
#define QTRBM_H

/* Generated by cbindgen from qt-rbm-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum QtrbmStatus {
  QTRBM_STATUS_OK = 0,
  QTRBM_STATUS_NULL_ARGUMENT = 1,
  QTRBM_STATUS_INVALID_ARGUMENT = 2,
  QTRBM_STATUS_IO_ERROR = 3,
  QTRBM_STATUS_DATA_ERROR = 4,
  QTRBM_STATUS_SIZE_LIMIT = 5,
  QTRBM_STATUS_NUMERICAL_ERROR = 6,
} QtrbmStatus;

/**
 * Opaque model handle.
 */
typedef struct QtrbmModel QtrbmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qtrbm_version(void);

/**
 * Message for the most recent failure on this thread. Never NULL;
 * the pointer stays valid until the next failing call on this thread.
 */
const char *qtrbm_last_error_message(void);

/**
 * Build a model from raw arrays: `w` is row-major `h_dim x v_dim`,
 * `c_v` has `v_dim` entries, `c_h` has `h_dim`, and `T = exp(log_t)`.
 *
 * # Safety
 * `w`, `c_v`, `c_h` must point to arrays of the stated lengths and
 * `out` must be a valid destination pointer.
 */
enum QtrbmStatus qtrbm_model_new(uintptr_t v_dim,
                                 uintptr_t h_dim,
                                 const double *w,
                                 const double *c_v,
                                 const double *c_h,
                                 double log_t,
                                 struct QtrbmModel **out);

/**
 * Load a checkpoint file (either parameterization).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid
 * destination pointer.
 */
enum QtrbmStatus qtrbm_model_load(const char *path, struct QtrbmModel **out);

/**
 * Write the model back out as a checkpoint file.
 *
 * # Safety
 * `model` must come from this library and `path` must be a valid
 * NUL-terminated string.
 */
enum QtrbmStatus qtrbm_model_save(const struct QtrbmModel *model, const char *path);

/**
 * Release a model handle. NULL is a no-op.
 *
 * # Safety
 * `model` must have been returned by a constructor of this library and
 * not freed before.
 */
void qtrbm_model_free(struct QtrbmModel *model);

/**
 * Visible and hidden unit counts.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QtrbmStatus qtrbm_model_dims(const struct QtrbmModel *model,
                                  uintptr_t *v_dim,
                                  uintptr_t *h_dim);

/**
 * Answer one probabilistic query.
 *
 * `v` holds `v_dim` evidence values in [0, 1] (entries under mask 0 are
 * ignored), `q` holds `v_dim` mask bits (1 = observed input, 0 = output
 * to predict). The inferred probability of 1 for every visible unit is
 * written to `v_hat` (`v_dim` entries); `h_hat` (`h_dim` entries) may be
 * NULL when hidden beliefs are not wanted. `n_layers` message-passing
 * layers are run (10 is the usual choice) with evidence clamp `clamp_l`
 * (use 20 unless you know better).
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum QtrbmStatus qtrbm_infer(const struct QtrbmModel *model,
                             const double *v,
                             const uint8_t *q,
                             uint32_t n_layers,
                             double clamp_l,
                             double *v_hat,
                             double *h_hat);

/**
 * Joint score `phi(v, h)` of a binary configuration;
 * `p(v, h)` is proportional to `exp(phi)`.
 *
 * # Safety
 * `v` and `h` must point to `v_dim` / `h_dim` binary entries and `out`
 * must be valid.
 */
enum QtrbmStatus qtrbm_energy(const struct QtrbmModel *model,
                              const uint8_t *v,
                              const uint8_t *h,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTRBM_H */
