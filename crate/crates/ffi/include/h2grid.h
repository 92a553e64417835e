#ifndef H2GRID_H
#define H2GRID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum H2Status {
  H2_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  H2_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or not valid UTF-8.
   */
  H2_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Bad input data, configuration or file.
   */
  H2_STATUS_DATA = 3,
  /**
   * The optimizer failed or a program was infeasible.
   */
  H2_STATUS_SOLVER = 4,
  /**
   * Internal panic; the handle involved should be freed and not reused.
   */
  H2_STATUS_PANIC = 5,
} H2Status;

/**
 * Parsed run configuration.
 */
typedef struct H2Config H2Config;

/**
 * Outcome of a method comparison.
 */
typedef struct H2Results H2Results;

/**
 * Evaluation time series.
 */
typedef struct H2Scenario H2Scenario;

/**
 * Practical totals of one method.
 */
typedef struct H2Summary {
  /**
   * 0 to 4 for M0 to M4.
   */
  uint32_t method;
  double cost_usd;
  double diesel_mwh;
  double loss_of_load_mwh;
  /**
   * NaN for methods without a reference trajectory.
   */
  double rmse_pct;
  double step_ms;
} H2Summary;

typedef struct H2RegretPoint {
  uint64_t horizon;
  double regret;
  double path_length;
  double violation;
} H2RegretPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * success. The pointer stays valid until the next call on the thread.
 */
const char *h2grid_last_error(void);

/**
 * Library version as a static string.
 */
const char *h2grid_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or come from a function of this library documented as
 * returning an owned string, and must not be freed twice.
 */
void h2grid_string_free(char *s);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum H2Status h2grid_config_new(struct H2Config **out);

/**
 * Configuration parsed from TOML text.
 *
 * # Safety
 * `toml` must be a nul-terminated string and `out` a valid pointer.
 */
enum H2Status h2grid_config_from_toml(const char *toml, struct H2Config **out);

/**
 * Configuration read from a TOML file; relative paths inside resolve
 * against the file's directory.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum H2Status h2grid_config_load(const char *path, struct H2Config **out);

/**
 * Sets the tracking weight and kernel bandwidth of the reference-based
 * methods.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum H2Status h2grid_config_set_tracking(struct H2Config *config, double phi, double sigma);

/**
 * The configuration as TOML; release with [`h2grid_string_free`].
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum H2Status h2grid_config_to_toml(const struct H2Config *config, char **out);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void h2grid_config_free(struct H2Config *config);

/**
 * Synthetic hourly scenario of `days` days.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum H2Status h2grid_scenario_synthetic(uint64_t seed, uint32_t days, struct H2Scenario **out);

/**
 * Scenario read from a CSV file and resampled to `resolution_minutes`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum H2Status h2grid_scenario_from_csv(const char *path,
                                       uint32_t resolution_minutes,
                                       struct H2Scenario **out);

/**
 * Hourly scenario from three arrays of `len` values in kW, starting at
 * midnight on 1 January of `year`.
 *
 * # Safety
 * Each array must hold `len` readable values; `out` must be valid.
 */
enum H2Status h2grid_scenario_from_arrays(const double *load_kw,
                                          const double *solar_kw,
                                          const double *wind_kw,
                                          size_t len,
                                          int32_t year,
                                          struct H2Scenario **out);

/**
 * Number of time steps.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
size_t h2grid_scenario_len(const struct H2Scenario *scenario);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void h2grid_scenario_free(struct H2Scenario *scenario);

/**
 * Runs the comma-separated `methods` (null for the configuration's list)
 * on `scenario`. M0 is always included as the baseline.
 *
 * # Safety
 * `config` and `scenario` must be live handles, `methods` null or a
 * nul-terminated string, `out` a valid pointer.
 */
enum H2Status h2grid_compare(const struct H2Config *config,
                             const struct H2Scenario *scenario,
                             const char *methods,
                             struct H2Results **out);

/**
 * Number of methods in `results`.
 *
 * # Safety
 * `results` must be a live handle.
 */
size_t h2grid_results_len(const struct H2Results *results);

/**
 * Summary of the `index`-th method.
 *
 * # Safety
 * `results` must be a live handle and `out` a valid pointer.
 */
enum H2Status h2grid_results_summary(const struct H2Results *results,
                                     size_t index,
                                     struct H2Summary *out);

/**
 * Copies the realized hydrogen content (kg) of the `index`-th method into
 * `buf`. `written` receives the trajectory length; when `capacity` is too
 * small nothing is copied and the call fails with `InvalidArgument`.
 *
 * # Safety
 * `results` must be a live handle, `buf` writable for `capacity` values
 * and `written` a valid pointer.
 */
enum H2Status h2grid_results_hydrogen(const struct H2Results *results,
                                      size_t index,
                                      double *buf,
                                      size_t capacity,
                                      size_t *written);

/**
 * Result table as CSV; release with [`h2grid_string_free`]. Wall times are
 * included only when `timing` is true.
 *
 * # Safety
 * `results` must be a live handle and `out` a valid pointer.
 */
enum H2Status h2grid_results_csv(const struct H2Results *results, bool timing, char **out);

/**
 * # Safety
 * `results` must be null or a handle not yet freed.
 */
void h2grid_results_free(struct H2Results *results);

/**
 * Dynamic regret of the expert ensemble on a synthetic convex stream for
 * each of the `n` horizons; `out` receives `n` points.
 *
 * # Safety
 * `horizons` must hold `n` readable values and `out` room for `n` points.
 */
enum H2Status h2grid_bench_regret(const uint64_t *horizons,
                                  size_t n,
                                  uint32_t dim,
                                  uint64_t seed,
                                  struct H2RegretPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* H2GRID_H */
