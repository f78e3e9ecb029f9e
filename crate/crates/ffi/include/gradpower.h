#ifndef GRADPOWER_H
#define GRADPOWER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Coefficient source for the gradient test's `a_40`.
 */
#define GP_SOURCE_CONSISTENT_CHAIN 0

#define GP_SOURCE_PAPER_TABLE 1

/**
 * Result codes.
 */
typedef enum {
  GP_STATUS_OK = 0,
  GP_STATUS_NULL_POINTER = 1,
  GP_STATUS_INVALID_ARGUMENT = 2,
  GP_STATUS_DOMAIN = 3,
  GP_STATUS_ESTIMATION = 4,
  GP_STATUS_NUMERICAL = 5,
  GP_STATUS_IO = 6,
  GP_STATUS_PANIC = 7,
} GpStatus;

/**
 * Opaque model handle.
 */
typedef struct GpModel GpModel;

typedef struct {
  double k_tt;
  double k_ttt;
  double k_t_tt;
  double k_t_t_t;
  double k_inv;
} GpCumulants;

/**
 * Statistics in the order LR, Wald, score, gradient.
 */
typedef struct {
  double theta_hat;
  double d_bar;
  double statistics[4];
  double p_values[4];
} GpTestResult;

typedef struct {
  double f;
  double lambda;
  double a[4];
} GpExpansion;

typedef struct {
  uint64_t completed;
  uint64_t failures;
  double rejection_rate[4];
  double mc_stderr[4];
  /**
   * Consistent-chain predictions.
   */
  double predicted_power[4];
  double gradient_mean;
  double gradient_mean_se;
} GpSimulationSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *gp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gp_version(void);

/**
 * Create a catalog model. `fixed` is a `key=value,...` list and may be NULL
 * or empty for models without constants.
 *
 * # Safety
 * `name` and `fixed` must be NULL or valid NUL-terminated strings; `out`
 * must be a valid pointer.
 */
GpStatus gp_model_new(const char *name, const char *fixed, GpModel **out);

/**
 * Release a model. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a handle from [`gp_model_new`] not yet freed.
 */
void gp_model_free(GpModel *model);

/**
 * Joint cumulants of the log-likelihood derivatives at `theta`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
GpStatus gp_cumulants(const GpModel *model, double theta, GpCumulants *out);

/**
 * The four test statistics of `H0: θ = theta0` for `len` observations.
 *
 * # Safety
 * `data` must point to `len` doubles; `model` and `out` must be valid.
 */
GpStatus gp_statistics(const GpModel *model,
                       const double *data,
                       size_t len,
                       double theta0,
                       GpTestResult *out);

/**
 * Coefficient table `a[i][k]` written row-major into `out[16]`.
 *
 * # Safety
 * `model` must be valid and `out` must point to 16 writable doubles.
 */
GpStatus gp_power_coefficients(const GpModel *model,
                               double theta0,
                               double eps,
                               uint32_t source,
                               double *out);

/**
 * Local powers of LR, Wald, score and gradient into `out[4]` (clamped to [0, 1]).
 *
 * # Safety
 * `model` must be valid and `out` must point to 4 writable doubles.
 */
GpStatus gp_local_powers(const GpModel *model,
                         double theta0,
                         double eps,
                         uint64_t n,
                         double alpha,
                         uint32_t source,
                         double *out);

/**
 * Noncentral chi-square CDF (`nc = 0` for central).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
GpStatus gp_chisq_cdf(double df, double nc, double x, double *out);

/**
 * Noncentral chi-square density at `x > 0`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
GpStatus gp_chisq_pdf(double df, double nc, double x, double *out);

/**
 * Central chi-square quantile.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
GpStatus gp_chisq_quantile(double df, double p, double *out);

/**
 * Composite-hypothesis expansion from a tensor document (JSON text).
 *
 * # Safety
 * `tensors_json` must be a NUL-terminated string, `eps` must point to
 * `eps_len` doubles, and `out` must be valid.
 */
GpStatus gp_composite_expansion(const char *tensors_json,
                                const double *eps,
                                size_t eps_len,
                                GpExpansion *out);

/**
 * Seeded Monte Carlo run. `threads = 0` uses the default worker pool.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
GpStatus gp_simulate(const GpModel *model,
                     double theta0,
                     double eps,
                     uint64_t n,
                     uint64_t reps,
                     double alpha,
                     uint64_t seed,
                     uint32_t threads,
                     GpSimulationSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRADPOWER_H */
