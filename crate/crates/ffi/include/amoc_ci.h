#ifndef AMOC_CI_H
#define AMOC_CI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define AMOC_SCHEME_CIRCULAR_OVERLAPPING 0

#define AMOC_SCHEME_CIRCULAR_NONOVERLAPPING 1

#define AMOC_GRID_DRIFT_SCALED 0

#define AMOC_GRID_FIXED 1

// Status codes returned by every fallible function.
typedef enum AmocStatus {
  AMOC_STATUS_OK = 0,
  // Null pointer, out-of-range parameter or unknown enum value.
  AMOC_STATUS_INVALID_ARGUMENT = 1,
  // Series too short or containing non-finite values.
  AMOC_STATUS_DATA_ERROR = 2,
  // Limit-law simulation hit the grid boundary too often.
  AMOC_STATUS_NUMERICAL_GUARD = 3,
  // Estimated shift is zero; the asymptotic interval is undefined.
  AMOC_STATUS_ZERO_SHIFT = 4,
  // Output buffer too small.
  AMOC_STATUS_BUFFER_TOO_SMALL = 5,
  // A Rust panic was caught at the boundary.
  AMOC_STATUS_PANIC = 6,
} AmocStatus;

// Opaque bootstrap distribution handle.
typedef struct AmocBootstrap AmocBootstrap;

// Opaque change-point fit handle.
typedef struct AmocFit AmocFit;

// Opaque limit-law sample handle.
typedef struct AmocLimitSamples AmocLimitSamples;

// Opaque series handle.
typedef struct AmocSeries AmocSeries;

typedef struct AmocFitSummary {
  size_t n;
  size_t m_hat;
  double mu1_hat;
  double mu2_hat;
  double d_hat;
} AmocFitSummary;

typedef struct AmocLrv {
  double tau2;
  double raw_tau2;
  size_t lambda;
  bool floored;
} AmocLrv;

// Unclipped interval; `level` is the nominal coverage `1 - alpha`.
typedef struct AmocInterval {
  double lower;
  double upper;
  double level;
} AmocInterval;

typedef struct AmocLimitConfig {
  double theta;
  double gamma;
  double half_width;
  double step;
  size_t replicates;
  uint64_t seed;
  // `AMOC_GRID_DRIFT_SCALED` or `AMOC_GRID_FIXED`.
  uint32_t grid;
} AmocLimitConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *amoc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *amoc_version(void);

// Copies `len` values into a new series handle.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum AmocStatus amoc_series_new(const double *values, size_t len, struct AmocSeries **out_series);

// # Safety
// `series` must be null or a handle from `amoc_series_new` not yet freed.
void amoc_series_free(struct AmocSeries *series);

// Length of the series, 0 for null.
//
// # Safety
// `series` must be null or a live handle.
size_t amoc_series_len(const struct AmocSeries *series);

// Writes `S_gamma(1..n-1)` into `buffer`, which must hold `n - 1` values.
//
// # Safety
// `series` must be a live handle and `buffer` writable for `buffer_len` doubles.
enum AmocStatus amoc_cusum(const struct AmocSeries *series,
                           double gamma,
                           double *buffer,
                           size_t buffer_len);

// Fits the single change-point model.
//
// # Safety
// `series` must be a live handle; `out_fit` must be writable.
enum AmocStatus amoc_fit(const struct AmocSeries *series, double gamma, struct AmocFit **out_fit);

// # Safety
// `fit` must be a live handle; `summary` must be writable.
enum AmocStatus amoc_fit_summary(const struct AmocFit *fit, struct AmocFitSummary *summary);

// # Safety
// `fit` must be null or a live handle.
void amoc_fit_free(struct AmocFit *fit);

// Bartlett long-run variance around `m_hat`. `lambda = 0` selects the
// default window `max(1, floor(0.1 n))`.
//
// # Safety
// `series` must be a live handle; `result` must be writable.
enum AmocStatus amoc_bartlett_lrv(const struct AmocSeries *series,
                                  size_t m_hat,
                                  size_t lambda,
                                  struct AmocLrv *result);

// Block-bootstrap distribution of the change-point estimator.
//
// # Safety
// `fit` must be a live handle; `out_boot` must be writable.
enum AmocStatus amoc_bootstrap_new(const struct AmocFit *fit,
                                   size_t block_length,
                                   size_t resamples,
                                   uint64_t seed,
                                   uint32_t scheme,
                                   struct AmocBootstrap **out_boot);

// Number of bootstrap draws, 0 for null.
//
// # Safety
// `boot` must be null or a live handle.
size_t amoc_bootstrap_len(const struct AmocBootstrap *boot);

// Copies the bootstrap change-point draws into `buffer`.
//
// # Safety
// `boot` must be a live handle and `buffer` writable for `buffer_len` values.
enum AmocStatus amoc_bootstrap_samples(const struct AmocBootstrap *boot,
                                       size_t *buffer,
                                       size_t buffer_len);

// # Safety
// `boot` must be a live handle; `result` must be writable.
enum AmocStatus amoc_bootstrap_ci(const struct AmocBootstrap *boot,
                                  double alpha,
                                  struct AmocInterval *result);

// # Safety
// `boot` must be null or a live handle.
void amoc_bootstrap_free(struct AmocBootstrap *boot);

// Fills `config` with the default simulation settings for `(theta, gamma)`.
//
// # Safety
// `config` must be writable.
enum AmocStatus amoc_limit_config_default(double theta,
                                          double gamma,
                                          struct AmocLimitConfig *config);

// Simulates argmax draws of the limit law.
//
// # Safety
// `config` must be readable; `out_samples` must be writable.
enum AmocStatus amoc_limit_simulate(const struct AmocLimitConfig *config,
                                    struct AmocLimitSamples **out_samples);

// # Safety
// `samples` must be a live handle; `result` must be writable.
enum AmocStatus amoc_limit_quantile(const struct AmocLimitSamples *samples,
                                    double p,
                                    double *result);

// Fraction of draws that landed near the grid edge, NaN for null.
//
// # Safety
// `samples` must be null or a live handle.
double amoc_limit_boundary_fraction(const struct AmocLimitSamples *samples);

// Asymptotic interval `[m - s q(1 - alpha/2), m - s q(alpha/2)]` with
// `s = tau2 / d_hat^2`.
//
// # Safety
// `samples` must be a live handle; `result` must be writable.
enum AmocStatus amoc_asymptotic_ci(const struct AmocLimitSamples *samples,
                                   size_t m_hat,
                                   double tau2,
                                   double d_hat,
                                   double alpha,
                                   struct AmocInterval *result);

// # Safety
// `samples` must be null or a live handle.
void amoc_limit_free(struct AmocLimitSamples *samples);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMOC_CI_H */
