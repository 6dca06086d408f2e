#ifndef PERCOFLOW_H
#define PERCOFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The nonzero codes shared with the CLI carry the same values
 * as its exit codes.
 */
typedef enum PercoflowStatus {
  PERCOFLOW_STATUS_OK = 0,
  PERCOFLOW_STATUS_INVALID_ARGUMENT = 2,
  PERCOFLOW_STATUS_NON_CONVERGENCE = 3,
  PERCOFLOW_STATUS_CHECK_FAILED = 4,
  PERCOFLOW_STATUS_NULL_POINTER = 5,
  PERCOFLOW_STATUS_BUFFER_TOO_SMALL = 6,
  PERCOFLOW_STATUS_PANIC = 7,
} PercoflowStatus;

/**
 * Recurrence class of the exchange chain.
 */
typedef enum PercoflowClass {
  PERCOFLOW_CLASS_POSITIVE_RECURRENT = 0,
  PERCOFLOW_CLASS_NULL_RECURRENT = 1,
  PERCOFLOW_CLASS_TRANSIENT = 2,
} PercoflowClass;

/**
 * Opaque distribution handle.
 */
typedef struct PercoflowDist PercoflowDist;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *percoflow_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *percoflow_last_error(void);

/**
 * Builds a distribution from its JSON form, e.g.
 * `{"head": [0.5], "tail": {"model": "geometric", "p": 0.5}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum PercoflowStatus percoflow_dist_from_json(const char *json, struct PercoflowDist **out);

/**
 * Uniform law on `{0, …, m−1}`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum PercoflowStatus percoflow_dist_uniform(size_t m, struct PercoflowDist **out);

/**
 * `μ_n = (1 − p)pⁿ`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum PercoflowStatus percoflow_dist_geometric(double p, struct PercoflowDist **out);

/**
 * Power tail `T(n) = c/n` with the default uniform head.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum PercoflowStatus percoflow_dist_power(double c, struct PercoflowDist **out);

/**
 * `μ_0 = 1 − p`, `μ_n = p`.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum PercoflowStatus percoflow_dist_two_point(size_t n, double p, struct PercoflowDist **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `dist` must come from one of the constructors and not be freed twice.
 */
void percoflow_dist_free(struct PercoflowDist *dist);

/**
 * `F(k)`.
 *
 * # Safety
 * `dist` must be a live handle and `out` writable.
 */
enum PercoflowStatus percoflow_dist_cdf(const struct PercoflowDist *dist, uint64_t k, double *out);

/**
 * Fills `buf` with draws `0..len` of stream `index` under `seed`.
 *
 * # Safety
 * `dist` must be a live handle and `buf` hold `len` values.
 */
enum PercoflowStatus percoflow_dist_sample(const struct PercoflowDist *dist,
                                           uint64_t seed,
                                           uint64_t index,
                                           uint64_t *buf,
                                           size_t len);

/**
 * Recurrence class of the exchange chain.
 *
 * # Safety
 * `dist` must be a live handle and `out` writable.
 */
enum PercoflowStatus percoflow_classify(const struct PercoflowDist *dist, enum PercoflowClass *out);

/**
 * Stationary measure `τ_0..τ_{len−1}`, normalized if requested (which needs
 * a finite mean), otherwise with `τ_0 = 1`. Finite support stops at the
 * last state; `written` receives the number of values stored.
 *
 * # Safety
 * `dist` must be a live handle, `buf` hold `len` values, `written` writable.
 */
enum PercoflowStatus percoflow_stationary(const struct PercoflowDist *dist,
                                          bool normalized,
                                          double *buf,
                                          size_t len,
                                          size_t *written);

/**
 * `q_m = ∏_{j≤m} F(j)` for `m < len`.
 *
 * # Safety
 * `dist` must be a live handle and `buf` hold `len` values.
 */
enum PercoflowStatus percoflow_q_sequence(const struct PercoflowDist *dist,
                                          double *buf,
                                          size_t len);

/**
 * `r_m` on the `arity`-ary tree for `m < len`.
 *
 * # Safety
 * `dist` must be a live handle and `buf` hold `len` values.
 */
enum PercoflowStatus percoflow_r_sequence(const struct PercoflowDist *dist,
                                          size_t arity,
                                          double *buf,
                                          size_t len);

/**
 * Perron root of the mean-matrix block of the given size.
 *
 * # Safety
 * `dist` must be a live handle and `out` writable.
 */
enum PercoflowStatus percoflow_rho_m(const struct PercoflowDist *dist,
                                     size_t size,
                                     double tol,
                                     double *out);

/**
 * Perron root of the transition-matrix block of the given size.
 *
 * # Safety
 * `dist` must be a live handle and `out` writable.
 */
enum PercoflowStatus percoflow_spectral_radius(const struct PercoflowDist *dist,
                                               size_t size,
                                               double tol,
                                               double *out);

/**
 * Checks the covered set of `{0..steps}` against the chain's positive
 * states on one sample. `PERCOFLOW_STATUS_CHECK_FAILED` on mismatch.
 *
 * # Safety
 * `dist` must be a live handle.
 */
enum PercoflowStatus percoflow_coupling_check(const struct PercoflowDist *dist,
                                              size_t steps,
                                              uint64_t seed);

/**
 * Mean and variance of the uncovered count on `{0..window}` over `trials`
 * samples.
 *
 * # Safety
 * `dist` must be a live handle; `mean` and `variance` writable.
 */
enum PercoflowStatus percoflow_census_line(const struct PercoflowDist *dist,
                                           size_t window,
                                           uint64_t trials,
                                           uint64_t seed,
                                           size_t workers,
                                           double *mean,
                                           double *variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERCOFLOW_H */
