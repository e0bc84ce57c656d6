#ifndef GYROCAL_H
#define GYROCAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GyrocalStatus {
  GYROCAL_STATUS_OK = 0,
  GYROCAL_STATUS_NULL_POINTER = 1,
  GYROCAL_STATUS_INVALID_ARGUMENT = 2,
  GYROCAL_STATUS_IO = 3,
  GYROCAL_STATUS_PARSE = 4,
  GYROCAL_STATUS_CONFIG = 5,
  GYROCAL_STATUS_DEGENERATE_GEOMETRY = 6,
  GYROCAL_STATUS_NOT_OBSERVABLE = 7,
  GYROCAL_STATUS_SIGN_RESOLUTION = 8,
  GYROCAL_STATUS_NO_STATIC_DATA = 9,
  GYROCAL_STATUS_NOT_CONVERGED = 10,
  GYROCAL_STATUS_TOO_MANY_FAILURES = 11,
  GYROCAL_STATUS_PANIC = 12,
} GyrocalStatus;

// How accelerometer readings are corrected before gyroscope calibration.
typedef enum GyrocalAccelMode {
  GYROCAL_ACCEL_MODE_IDENTITY = 0,
  // Fit scale and bias to the session's static accelerometer poses.
  GYROCAL_ACCEL_MODE_FIT = 1,
  // Use the parameters passed alongside.
  GYROCAL_ACCEL_MODE_KNOWN = 2,
} GyrocalAccelMode;

typedef struct GyrocalMonteCarlo GyrocalMonteCarlo;

typedef struct GyrocalSession GyrocalSession;

typedef struct GyrocalSimConfig GyrocalSimConfig;

typedef struct GyrocalVec3 {
  double x;
  double y;
  double z;
} GyrocalVec3;

// Per-axis scale and bias. Gyroscope bias is in deg/s, accelerometer bias in m/s^2.
typedef struct GyrocalParams {
  struct GyrocalVec3 scale;
  struct GyrocalVec3 bias;
} GyrocalParams;

typedef struct GyrocalEstimate {
  struct GyrocalParams params;
  struct GyrocalVec3 beta_hat;
  // Recovered gravity/rate dot product, deg/s.
  double l;
  struct GyrocalVec3 zero_rate_offset;
  struct GyrocalParams accel;
  double residual_norm;
  double normal_equation_residual;
  double condition_number;
} GyrocalEstimate;

typedef struct GyrocalSummary {
  size_t n;
  double mean;
  double variance;
  double skewness;
  double excess_kurtosis;
  double min;
  double max;
  double range;
  // Non-zero when fewer than two values or zero spread.
  int degenerate;
} GyrocalSummary;

// Scale-factor estimate and error statistics of one axis of a Monte-Carlo battery.
typedef struct GyrocalAxisSummary {
  struct GyrocalSummary estimate;
  struct GyrocalSummary error;
  double mean_abs_error;
} GyrocalAxisSummary;

// Library version as a static NUL-terminated string.
const char *gyrocal_version(void);

// Copies the calling thread's most recent error message into `buf` (always
// NUL-terminated when `len > 0`) and returns the buffer size needed for the
// whole message, or 0 when no error has been recorded.
//
// # Safety
// `buf` must be null or point to at least `len` writable bytes.
size_t gyrocal_last_error(char *buf, size_t len);

// Reads a session file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for writes.
enum GyrocalStatus gyrocal_session_read(const char *path, struct GyrocalSession **out);

// Writes a session as one summary row per segment.
//
// # Safety
// `session` must come from this library; `path` must be a NUL-terminated string.
enum GyrocalStatus gyrocal_session_write(const struct GyrocalSession *session, const char *path);

// Number of calibration poses in `session`, 0 for a null handle.
//
// # Safety
// `session` must be null or come from this library.
size_t gyrocal_session_pose_count(const struct GyrocalSession *session);

// # Safety
// `session` must be null or a handle from this library not yet freed.
void gyrocal_session_free(struct GyrocalSession *session);

// Default simulation settings.
//
// # Safety
// `out` must be valid for writes.
enum GyrocalStatus gyrocal_sim_config_default(struct GyrocalSimConfig **out);

// Loads simulation settings from a TOML file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for writes.
enum GyrocalStatus gyrocal_sim_config_read(const char *path, struct GyrocalSimConfig **out);

// # Safety
// `config` must come from this library.
enum GyrocalStatus gyrocal_sim_config_set_seed(struct GyrocalSimConfig *config, uint64_t seed);

// Sets the per-sample gyroscope noise deviation on all axes, deg/s.
//
// # Safety
// `config` must come from this library.
enum GyrocalStatus gyrocal_sim_config_set_gyro_noise(struct GyrocalSimConfig *config, double sigma);

// # Safety
// `config` must be null or a handle from this library not yet freed.
void gyrocal_sim_config_free(struct GyrocalSimConfig *config);

// Simulates run `run` of the configured battery. The true gyroscope
// parameters are written to `truth` when it is not null.
//
// # Safety
// `config` must come from this library; `out` must be valid for writes;
// `truth` must be null or valid for writes.
enum GyrocalStatus gyrocal_simulate(const struct GyrocalSimConfig *config,
                                    uint64_t run,
                                    struct GyrocalSession **out,
                                    struct GyrocalParams *truth);

// Estimates gyroscope scale factors and biases from `session`.
//
// # Safety
// `session` must come from this library; `accel` must be readable when
// `mode` is `Known` and is ignored otherwise; `out` must be valid for writes.
enum GyrocalStatus gyrocal_calibrate(const struct GyrocalSession *session,
                                     enum GyrocalAccelMode mode,
                                     const struct GyrocalParams *accel,
                                     struct GyrocalEstimate *out);

// Corrects one raw gyroscope reading: `scale * raw + bias`.
//
// # Safety
// `params` must be readable and `out` valid for writes.
enum GyrocalStatus gyrocal_apply_gyro(const struct GyrocalParams *params,
                                      struct GyrocalVec3 raw,
                                      struct GyrocalVec3 *out);

// Descriptive statistics of `len` values.
//
// # Safety
// `data` must point to `len` readable doubles; `out` must be valid for writes.
enum GyrocalStatus gyrocal_summarize(const double *data, size_t len, struct GyrocalSummary *out);

// Runs a Monte-Carlo battery. `threads` of 0 uses all available cores.
//
// # Safety
// `config` must come from this library; `out` must be valid for writes.
enum GyrocalStatus gyrocal_montecarlo_run(const struct GyrocalSimConfig *config,
                                          size_t runs,
                                          size_t threads,
                                          enum GyrocalAccelMode mode,
                                          struct GyrocalMonteCarlo **out);

// Statistics of axis 0, 1 or 2 (x, y, z).
//
// # Safety
// `report` must come from this library; `out` must be valid for writes.
enum GyrocalStatus gyrocal_montecarlo_axis(const struct GyrocalMonteCarlo *report,
                                           size_t axis,
                                           struct GyrocalAxisSummary *out);

// Number of failed runs in the battery, 0 for a null handle.
//
// # Safety
// `report` must be null or come from this library.
size_t gyrocal_montecarlo_failures(const struct GyrocalMonteCarlo *report);

// # Safety
// `report` must be null or a handle from this library not yet freed.
void gyrocal_montecarlo_free(struct GyrocalMonteCarlo *report);

#endif  /* GYROCAL_H */
