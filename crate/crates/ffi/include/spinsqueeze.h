#ifndef SPINSQUEEZE_H
#define SPINSQUEEZE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_PROPAGATION = 3,
  SQ_STATUS_FIT_FAILED = 4,
  SQ_STATUS_UNDEFINED = 5,
  SQ_STATUS_BUFFER_TOO_SMALL = 6,
  SQ_STATUS_PANIC = 7,
} SqStatus;

typedef enum SqMethod {
  SQ_METHOD_AUTO = 0,
  SQ_METHOD_DENSE = 1,
  SQ_METHOD_KRYLOV = 2,
} SqMethod;

typedef enum SqMetric {
  SQ_METRIC_FID_EWSS = 0,
  SQ_METRIC_FID_TFS = 1,
  SQ_METRIC_VAR_Z_MAX = 2,
  SQ_METRIC_VAR_Y_MIN = 3,
} SqMetric;

typedef enum SqFitFamily {
  SQ_FIT_FAMILY_SQ_POWER_OFFSET = 0,
  SQ_FIT_FAMILY_SHIFTED_POWER = 1,
  SQ_FIT_FAMILY_LOG_OVER_LINEAR = 2,
} SqFitFamily;

/**
 * Opaque collective-spin state.
 */
typedef struct SqState SqState;

typedef struct SqMoments {
  double mean_x;
  double mean_y;
  double mean_z;
  double var_x;
  double var_y;
  double var_z;
} SqMoments;

typedef struct SqScanResult {
  double tau_star;
  double value_star;
  double sd_z_star;
} SqScanResult;

/**
 * Unused trailing slots are zero for two-parameter families.
 */
typedef struct SqFitResult {
  uintptr_t n_params;
  double params[3];
  double se[3];
  double rss;
} SqFitResult;

typedef struct SqFisherBound {
  double fisher_upper;
  double sigma_lower;
} SqFisherBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *sq_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *sq_version(void);

/**
 * Coherent spin state `|α, β⟩`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SqStatus sq_state_css(double j, double alpha, double beta, struct SqState **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SqStatus sq_state_ewss(double j, struct SqState **out);

/**
 * Twin-Fock state; integer `j` only.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SqStatus sq_state_twin_fock(double j, struct SqState **out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum SqStatus sq_state_cat(double j, struct SqState **out);

/**
 * Squeezed state after twisting for `tau` and the `π/2` readout about y.
 * `tol <= 0` selects the default tolerance.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SqStatus sq_state_sss(double j,
                           double tau,
                           enum SqMethod method,
                           double tol,
                           struct SqState **out);

/**
 * Releases a state. NULL is ignored.
 *
 * # Safety
 * `s` must come from an `sq_state_*` constructor and not be freed twice.
 */
void sq_state_free(struct SqState *s);

/**
 * Basis dimension `2J+1`, or 0 for NULL.
 *
 * # Safety
 * `s` must be NULL or a live state.
 */
uintptr_t sq_state_dim(const struct SqState *s);

/**
 * Copies amplitudes in descending-M order into `re`/`im` (length `len`).
 *
 * # Safety
 * `s` must be a live state; `re` and `im` valid for `len` writes.
 */
enum SqStatus sq_state_amplitudes(const struct SqState *s, double *re, double *im, uintptr_t len);

/**
 * `P(M)` in descending-M order.
 *
 * # Safety
 * `s` must be a live state; `out` valid for `len` writes.
 */
enum SqStatus sq_state_probabilities(const struct SqState *s, double *out, uintptr_t len);

/**
 * `|⟨a|b⟩|²`.
 *
 * # Safety
 * `a`, `b` live states; `out` valid for writes.
 */
enum SqStatus sq_fidelity(const struct SqState *a, const struct SqState *b, double *out);

/**
 * # Safety
 * `s` a live state; `out` valid for writes.
 */
enum SqStatus sq_moments(const struct SqState *s, struct SqMoments *out);

/**
 * Optimal-time scan over the automatic window. `n_grid = 0` selects the
 * default resolution.
 *
 * # Safety
 * `out` valid for writes.
 */
enum SqStatus sq_scan(double j, enum SqMetric metric, uintptr_t n_grid, struct SqScanResult *out);

/**
 * Least-squares fit from automatic initialization.
 *
 * # Safety
 * `js`, `ys` valid for `n` reads; `out` valid for writes.
 */
enum SqStatus sq_fit(enum SqFitFamily family,
                     const double *js,
                     const double *ys,
                     uintptr_t n,
                     struct SqFitResult *out);

/**
 * Cramér–Rao bounds for field estimation given `⟨ΔJz²⟩`.
 *
 * # Safety
 * `out` valid for writes.
 */
enum SqStatus sq_fisher_bound(double variance_z,
                              double gamma_s,
                              double t,
                              struct SqFisherBound *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINSQUEEZE_H */
