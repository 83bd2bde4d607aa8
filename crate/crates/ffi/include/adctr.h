/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ADCTR_H
#define ADCTR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Return code of every fallible call.
 */
typedef enum AdctrCode {
  ADCTR_CODE_OK = 0,
  ADCTR_CODE_NULL_POINTER = 1,
  ADCTR_CODE_INVALID_ARGUMENT = 2,
  ADCTR_CODE_NON_FINITE_START = 3,
  ADCTR_CODE_UNKNOWN_PROBLEM = 4,
  ADCTR_CODE_BAD_DIMENSION = 5,
  ADCTR_CODE_BUFFER_TOO_SMALL = 6,
  ADCTR_CODE_PANIC = 7,
} AdctrCode;

/**
 * Outcome of a run.
 */
typedef enum AdctrStatus {
  ADCTR_STATUS_CONVERGED = 0,
  ADCTR_STATUS_MAX_ITER = 1,
  ADCTR_STATUS_STALLED = 2,
  ADCTR_STATUS_SUBPROBLEM_FAILURE = 3,
} AdctrStatus;

typedef enum AdctrStrategy {
  /**
   * Alternating-direction subproblem solve.
   */
  ADCTR_STRATEGY_ADM = 0,
  /**
   * Conic dogleg.
   */
  ADCTR_STRATEGY_DCTR = 1,
} AdctrStrategy;

/**
 * Opaque solver settings.
 */
typedef struct AdctrConfig AdctrConfig;

/**
 * Opaque result of one run.
 */
typedef struct AdctrReport AdctrReport;

/**
 * Objective callback: returns `f(x)` for `x` of length `n`.
 */
typedef double (*AdctrObjective)(const double *x, size_t n, void *user);

/**
 * Gradient callback: writes `n` entries to `g`. A nonzero return marks the
 * point as unusable (treated like a non-finite gradient).
 */
typedef int32_t (*AdctrGradient)(const double *x, size_t n, double *g, void *user);

/**
 * Counters of a run.
 */
typedef struct AdctrCounters {
  size_t iters;
  size_t nf;
  size_t ng;
  size_t accepted;
  /**
   * Predicted-reduction bound violations (0 unless bound checking was on).
   */
  size_t bound_violations;
  double f_final;
  double gnorm_final;
  double wall_time_s;
} AdctrCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *adctr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *adctr_version(void);

/**
 * New configuration with the default settings. Free with
 * [`adctr_config_free`].
 */
struct AdctrConfig *adctr_config_new(void);

/**
 * # Safety
 * `cfg` must come from [`adctr_config_new`] and not be freed twice.
 */
void adctr_config_free(struct AdctrConfig *cfg);

/**
 * `strategy` is one of the `AdctrStrategy` values.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum AdctrCode adctr_config_set_strategy(struct AdctrConfig *cfg, int32_t strategy);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum AdctrCode adctr_config_set_grad_tol(struct AdctrConfig *cfg, double tol);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum AdctrCode adctr_config_set_max_iter(struct AdctrConfig *cfg, size_t max_iter);

/**
 * Sets the initial radius; the radius cap grows to match if needed.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum AdctrCode adctr_config_set_delta0(struct AdctrConfig *cfg, double delta0);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum AdctrCode adctr_config_set_check_bounds(struct AdctrConfig *cfg, bool on);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum AdctrCode adctr_config_set_scale_initial_hessian(struct AdctrConfig *cfg, bool on);

/**
 * Minimize a user function. `cfg` may be NULL for the defaults. On success
 * `*out` receives a report to release with [`adctr_report_free`].
 *
 * # Safety
 * `x0` must point to `n` doubles; the callbacks must be safe to call with
 * `user` and must not unwind.
 */
enum AdctrCode adctr_minimize(const struct AdctrConfig *cfg,
                              size_t n,
                              const double *x0,
                              AdctrObjective objective,
                              AdctrGradient gradient,
                              void *user,
                              struct AdctrReport **out);

/**
 * Minimize a catalogue problem by name (or number) at dimension `n`,
 * starting from its standard point.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum AdctrCode adctr_minimize_problem(const struct AdctrConfig *cfg,
                                      const char *name,
                                      size_t n,
                                      struct AdctrReport **out);

/**
 * # Safety
 * `report` must come from a minimize call and not be freed twice.
 */
void adctr_report_free(struct AdctrReport *report);

/**
 * Run status; a NULL report reads as `SubproblemFailure`.
 *
 * # Safety
 * `report` must be NULL or a live report handle.
 */
enum AdctrStatus adctr_report_status(const struct AdctrReport *report);

/**
 * # Safety
 * `report` must be a live report handle and `out` writable.
 */
enum AdctrCode adctr_report_counters(const struct AdctrReport *report, struct AdctrCounters *out);

/**
 * Dimension of the final point (0 for a NULL report).
 *
 * # Safety
 * `report` must be NULL or a live report handle.
 */
size_t adctr_report_dim(const struct AdctrReport *report);

/**
 * Copy the final point into `x` (capacity `len`).
 *
 * # Safety
 * `x` must point to `len` writable doubles.
 */
enum AdctrCode adctr_report_x(const struct AdctrReport *report, double *x, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADCTR_H */
