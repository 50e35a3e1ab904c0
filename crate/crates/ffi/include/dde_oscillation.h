#ifndef DDE_OSCILLATION_H
#define DDE_OSCILLATION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `kind` argument of [`ddo_limsup_f`].
 */
#define DDO_KIND_INNER 0

#define DDO_KIND_OUTER 1

/**
 * `history_kind` argument of [`ddo_simulate`].
 */
#define DDO_HISTORY_CONSTANT 0

#define DDO_HISTORY_EXPONENTIAL 1

typedef enum DdoStatus {
  DDO_STATUS_OK = 0,
  DDO_STATUS_NULL_POINTER = 1,
  DDO_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad config, argument or simulation setup.
   */
  DDO_STATUS_INVALID_INPUT = 3,
  /**
   * A quantity does not exist for this equation (for example
   * `lambda0` with `alpha > 1/e`).
   */
  DDO_STATUS_NUMERICAL = 4,
  DDO_STATUS_PANIC = 5,
} DdoStatus;

/**
 * Opaque equation handle.
 */
typedef struct DdoEquation DdoEquation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses and validates a JSON config. On success `*out_handle` owns a new
 * handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_handle` a valid pointer.
 */
enum DdoStatus ddo_equation_from_json(const char *json, struct DdoEquation **out_handle);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from [`ddo_equation_from_json`] and not be used again.
 */
void ddo_equation_free(struct DdoEquation *handle);

/**
 * Number of delay terms and common period.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DdoStatus ddo_equation_shape(const struct DdoEquation *handle,
                                  size_t *out_terms,
                                  double *out_period);

/**
 * `alpha = liminf int_{tau_max(t)}^t sum p_i`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DdoStatus ddo_alpha(const struct DdoEquation *handle, double tol, double *out_value);

/**
 * Smallest root of `lambda = exp(alpha lambda)`; `Numerical` when
 * `alpha > 1/e`.
 *
 * # Safety
 * `out_value` must be valid.
 */
enum DdoStatus ddo_lambda0(double alpha, double *out_value);

/**
 * limsup of `F_inner` (`kind` = [`DDO_KIND_INNER`]) or `F_outer` at depth `r`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum DdoStatus ddo_limsup_f(const struct DdoEquation *handle,
                            uint32_t r,
                            uint32_t kind,
                            double tol,
                            double *out_value);

/**
 * Runs every criterion and returns the report as JSON in `*out_json`
 * (free with [`ddo_string_free`]). `*out_oscillatory` is 1 when some
 * criterion is satisfied.
 *
 * # Safety
 * Pointers must be valid; `out_oscillatory` may be null.
 */
enum DdoStatus ddo_check(const struct DdoEquation *handle,
                         uint32_t r,
                         double tol,
                         char **out_json,
                         int32_t *out_oscillatory);

/**
 * Integrates on `[0, t_end]` and reports the number of sign changes and the
 * first one (NaN when there is none).
 *
 * # Safety
 * Pointers must be valid; `out_first` may be null.
 */
enum DdoStatus ddo_simulate(const struct DdoEquation *handle,
                            uint32_t history_kind,
                            double history_value,
                            double t_end,
                            double step,
                            size_t *out_sign_changes,
                            double *out_first);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void ddo_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *ddo_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDE_OSCILLATION_H */
