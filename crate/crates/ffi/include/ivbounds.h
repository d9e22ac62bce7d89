#ifndef IVBOUNDS_H
#define IVBOUNDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define IVB_CALL 0

#define IVB_PUT 1

#define IVB_SEED_L3 0

#define IVB_SEED_L2 1

#define IVB_SEED_LU23 2

#define IVB_SEED_INFLECTION 3

#define IVB_SEED_USER 4

typedef enum IvbStatus {
  IVB_STATUS_OK = 0,
  /**
   * An argument is outside the domain of the function.
   */
  IVB_STATUS_DOMAIN = 1,
  /**
   * The premium is at or below intrinsic value.
   */
  IVB_STATUS_BAND_BELOW = 2,
  /**
   * The premium is at or above the maximum option value.
   */
  IVB_STATUS_BAND_ABOVE = 3,
  IVB_STATUS_NULL_POINTER = 4,
  IVB_STATUS_INVALID_CONFIG = 5,
  IVB_STATUS_INTERNAL = 6,
} IvbStatus;

/**
 * Opaque solver configuration.
 */
typedef struct IvbSolver IvbSolver;

/**
 * Opaque iterate history of one solve.
 */
typedef struct IvbTrace IvbTrace;

/**
 * Every closed-form bound. `u2` is only meaningful when `u2_defined`.
 */
typedef struct IvbBoundSet {
  double l1;
  double l2;
  double l_inv;
  double l3;
  double l_u23;
  double u1;
  double u2;
  bool u2_defined;
  double u3;
  double u3_prime;
  double u23;
} IvbBoundSet;

typedef struct IvbSolveResult {
  /**
   * Standardized volatility `σ = Σ·√T`.
   */
  double sigma;
  uint32_t iterations;
  /**
   * `|ln C(σ) - ln c|` at the returned `σ`.
   */
  double final_log_error;
  bool converged;
} IvbSolveResult;

typedef struct IvbRawSolution {
  double c;
  double k;
  /**
   * Annualized volatility `Σ = σ/√T`.
   */
  double implied_vol;
  struct IvbSolveResult result;
} IvbRawSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or an empty string.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ivb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ivb_version(void);

/**
 * Maps a quote to its standardized out-of-the-money call `(c, k)`.
 *
 * # Safety
 * `out_c` and `out_k` must be null or valid for writes.
 */
enum IvbStatus ivb_standardize(double premium,
                               double forward,
                               double strike,
                               double expiry,
                               int32_t kind,
                               double discount_factor,
                               double *out_c,
                               double *out_k);

/**
 * Standardized call price at volatility `sigma >= 0`.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum IvbStatus ivb_price(double sigma, double k, double *out);

/**
 * Natural log of the standardized call price, for `sigma > 0`.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum IvbStatus ivb_log_price(double sigma, double k, double *out);

/**
 * Every closed-form bound of `(c, k)`.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum IvbStatus ivb_bounds(double c, double k, struct IvbBoundSet *out);

/**
 * Implied volatility by bisection on the log price, to `|g| <= tol`.
 *
 * # Safety
 * `out` must be null or valid for a write.
 */
enum IvbStatus ivb_oracle(double c, double k, double tol, double *out);

/**
 * A solver with the default configuration: seed L3, 8 iterations, log
 * tolerance 1e-12. Release with [`ivb_solver_free`].
 */
struct IvbSolver *ivb_solver_new(void);

/**
 * # Safety
 * `solver` must be null or a pointer from [`ivb_solver_new`] not yet freed.
 */
void ivb_solver_free(struct IvbSolver *solver);

/**
 * # Safety
 * `solver` must be null or a live handle.
 */
enum IvbStatus ivb_solver_set_max_iter(struct IvbSolver *solver, uint32_t max_iter);

/**
 * Stop once `|ln C(σ) - ln c| <= tol`.
 *
 * # Safety
 * `solver` must be null or a live handle.
 */
enum IvbStatus ivb_solver_set_tolerance(struct IvbSolver *solver, double tol);

/**
 * One of the `IVB_SEED_*` policies. `sigma0` is read only for
 * `IVB_SEED_USER`; convergence is guaranteed only from a lower bound.
 *
 * # Safety
 * `solver` must be null or a live handle.
 */
enum IvbStatus ivb_solver_set_seed(struct IvbSolver *solver, int32_t seed, double sigma0);

/**
 * Solves for the standardized volatility of `(c, k)`.
 *
 * # Safety
 * `solver` must be null or a live handle; `out` null or valid for a write.
 */
enum IvbStatus ivb_solve(const struct IvbSolver *solver,
                         double c,
                         double k,
                         struct IvbSolveResult *out);

/**
 * Standardizes a market quote, solves, and annualizes.
 *
 * # Safety
 * `solver` must be null or a live handle; `out` null or valid for a write.
 */
enum IvbStatus ivb_solve_raw(const struct IvbSolver *solver,
                             double premium,
                             double forward,
                             double strike,
                             double expiry,
                             int32_t kind,
                             double discount_factor,
                             struct IvbRawSolution *out);

/**
 * Like [`ivb_solve`] but keeps every iterate. Release with [`ivb_trace_free`].
 *
 * # Safety
 * `solver` must be null or a live handle; `out` null or valid for a write.
 */
enum IvbStatus ivb_solve_traced(const struct IvbSolver *solver,
                                double c,
                                double k,
                                struct IvbTrace **out);

/**
 * Number of iterates including the seed; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t ivb_trace_len(const struct IvbTrace *trace);

/**
 * Iterate `index` as `(σ, ln C(σ) - ln c)`.
 *
 * # Safety
 * `trace` must be null or a live handle; the out-pointers null or valid.
 */
enum IvbStatus ivb_trace_get(const struct IvbTrace *trace,
                             size_t index,
                             double *out_sigma,
                             double *out_log_residual);

/**
 * Summary of the traced solve.
 *
 * # Safety
 * `trace` must be null or a live handle; `out` null or valid for a write.
 */
enum IvbStatus ivb_trace_result(const struct IvbTrace *trace, struct IvbSolveResult *out);

/**
 * # Safety
 * `trace` must be null or a pointer from [`ivb_solve_traced`] not yet freed.
 */
void ivb_trace_free(struct IvbTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IVBOUNDS_H */
