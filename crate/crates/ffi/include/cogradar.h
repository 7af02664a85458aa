#ifndef COGRADAR_H
#define COGRADAR_H

/* Generated by cbindgen from cogradar-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum CogradarStatus {
  COGRADAR_STATUS_OK = 0,
  COGRADAR_STATUS_NULL_POINTER = 1,
  COGRADAR_STATUS_INVALID_ARGUMENT = 2,
  COGRADAR_STATUS_UTF8 = 3,
  COGRADAR_STATUS_IO = 4,
  COGRADAR_STATUS_CONFIG = 5,
  COGRADAR_STATUS_NUMERICAL = 6,
  COGRADAR_STATUS_DIVERGED = 7,
  COGRADAR_STATUS_BUFFER_TOO_SMALL = 8,
} CogradarStatus;

/**
 * Radar operating mode.
 */
typedef enum CogradarMode {
  COGRADAR_MODE_COGNITIVE = 0,
  COGRADAR_MODE_TRADITIONAL = 1,
} CogradarMode;

/**
 * Tracking filter selection.
 */
typedef enum CogradarFilter {
  COGRADAR_FILTER_EKF = 0,
  COGRADAR_FILTER_UKF = 1,
  COGRADAR_FILTER_CKF = 2,
} CogradarFilter;

/**
 * Opaque fitted source-separation model.
 */
typedef struct CogradarPica CogradarPica;

/**
 * Opaque Monte Carlo RMSE result.
 */
typedef struct CogradarRmse CogradarRmse;

/**
 * Opaque experiment description (scenario, waveform library bounds,
 * selection policy, filter, mode).
 */
typedef struct CogradarScenario CogradarScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cogradar_last_error_message(void);

/**
 * Library version as a static C string.
 */
const char *cogradar_version(void);

/**
 * Default experiment (the benchmark reentry scenario).
 */
struct CogradarScenario *cogradar_scenario_default(void);

/**
 * Load an experiment from a config file; returns NULL on failure (see
 * `cogradar_last_error_message`).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct CogradarScenario *cogradar_scenario_from_file(const char *path);

/**
 * # Safety
 * `scenario` must come from a `cogradar_scenario_*` constructor and not
 * have been freed.
 */
void cogradar_scenario_free(struct CogradarScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum CogradarStatus cogradar_scenario_set_mode(struct CogradarScenario *scenario,
                                               enum CogradarMode mode);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum CogradarStatus cogradar_scenario_set_filter(struct CogradarScenario *scenario,
                                                 enum CogradarFilter filter);

/**
 * Run the Monte Carlo RMSE experiment described by the scenario.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must point to writable storage
 * for one pointer.
 */
enum CogradarStatus cogradar_run_rmse(const struct CogradarScenario *scenario,
                                      uintptr_t n_runs,
                                      uint64_t seed,
                                      struct CogradarRmse **out);

/**
 * Number of time steps in the curve.
 *
 * # Safety
 * `rmse` must be a live handle.
 */
uintptr_t cogradar_rmse_len(const struct CogradarRmse *rmse);

/**
 * Diverged-and-excluded run count.
 *
 * # Safety
 * `rmse` must be a live handle.
 */
uintptr_t cogradar_rmse_divergences(const struct CogradarRmse *rmse);

/**
 * Copy the curve columns into caller-provided buffers of capacity `cap`
 * each; any of the destination pointers may be NULL to skip that column.
 *
 * # Safety
 * Non-NULL destinations must have space for `cap` doubles.
 */
enum CogradarStatus cogradar_rmse_copy(const struct CogradarRmse *rmse,
                                       double *times,
                                       double *rmse_altitude,
                                       double *rmse_velocity,
                                       uintptr_t cap);

/**
 * # Safety
 * `rmse` must come from `cogradar_run_rmse` and not have been freed.
 */
void cogradar_rmse_free(struct CogradarRmse *rmse);

/**
 * Fit the noisy linear latent-variable model to a row-major
 * channels-by-samples matrix.
 *
 * # Safety
 * `data` must point to `channels * samples` doubles; `out` must point to
 * writable storage for one pointer.
 */
enum CogradarStatus cogradar_pica_fit(const double *data,
                                      uintptr_t channels,
                                      uintptr_t samples,
                                      uintptr_t latent_dim,
                                      struct CogradarPica **out);

/**
 * Estimated isotropic noise variance.
 *
 * # Safety
 * `pica` must be a live handle; `out` must be writable.
 */
enum CogradarStatus cogradar_pica_noise_variance(const struct CogradarPica *pica, double *out);

/**
 * Latent dimension the model was fitted with.
 *
 * # Safety
 * `pica` must be a live handle.
 */
uintptr_t cogradar_pica_latent_dim(const struct CogradarPica *pica);

/**
 * Copy the mixing matrix (row-major channels x latent_dim).
 *
 * # Safety
 * `out` must have space for `cap` doubles.
 */
enum CogradarStatus cogradar_pica_mixing_copy(const struct CogradarPica *pica,
                                              double *out,
                                              uintptr_t cap);

/**
 * Reconstruct sources for a data matrix compatible with the fitted model
 * (row-major output, latent_dim x samples).
 *
 * # Safety
 * `data` must hold `channels * samples` doubles; `out` must have space
 * for `cap` doubles.
 */
enum CogradarStatus cogradar_pica_sources(const struct CogradarPica *pica,
                                          const double *data,
                                          uintptr_t channels,
                                          uintptr_t samples,
                                          double *out,
                                          uintptr_t cap);

/**
 * # Safety
 * `pica` must come from `cogradar_pica_fit` and not have been freed.
 */
void cogradar_pica_free(struct CogradarPica *pica);

/**
 * Averaged one-sided periodogram. Writes `segment_length / 2 + 1` bins
 * and stores that count in `out_len`.
 *
 * # Safety
 * `signal` must hold `signal_len` doubles; `out` must have space for
 * `out_cap` doubles; `out_len` must be writable.
 */
enum CogradarStatus cogradar_power_spectrum(const double *signal,
                                            uintptr_t signal_len,
                                            uintptr_t segment_length,
                                            double *out,
                                            uintptr_t out_cap,
                                            uintptr_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COGRADAR_H */
