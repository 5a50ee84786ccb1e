#ifndef BOOST_FFI_H
#define BOOST_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BoostParamSet {
  BOOST_PARAM_SET_DESK = 0,
  BOOST_PARAM_SET_PAPER = 1,
} BoostParamSet;

typedef enum BoostProfile {
  BOOST_PROFILE_FIXED = 0,
  /**
   * 24 → 26 V input step at 0.5 s.
   */
  BOOST_PROFILE_VARIABLE = 1,
} BoostProfile;

typedef enum BoostStatus {
  BOOST_STATUS_OK = 0,
  BOOST_STATUS_NULL_POINTER = 1,
  BOOST_STATUS_INVALID_ARGUMENT = 2,
  BOOST_STATUS_NUMERICAL = 3,
  BOOST_STATUS_IO = 4,
  BOOST_STATUS_PANIC = 5,
} BoostStatus;

/**
 * Opaque environment handle.
 */
typedef struct BoostEnvHandle BoostEnvHandle;

/**
 * Opaque network handle.
 */
typedef struct BoostMlpHandle BoostMlpHandle;

typedef struct BoostObservation {
  double v_out;
  double error;
  double error_rate;
} BoostObservation;

typedef struct BoostStep {
  struct BoostObservation observation;
  double reward;
  double duty;
  double i_l;
  double time;
  bool done;
  bool terminated;
} BoostStep;

typedef struct BoostReward {
  double reward;
  bool flag;
  bool terminate;
} BoostReward;

typedef struct BoostStepMetrics {
  double rise_time;
  double settling_time;
  double overshoot_pct;
  double undershoot_pct;
  double steady_state_error;
  bool settled;
} BoostStepMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated, truncated
 * to `len`) into `buf` and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t boost_last_error(char *buf, size_t len);

/**
 * Creates an environment for `v_ref` with the default limits and horizon.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum BoostStatus boost_env_new(enum BoostParamSet params,
                               double v_ref,
                               enum BoostProfile profile,
                               bool terminate,
                               struct BoostEnvHandle **out);

/**
 * # Safety
 * `env` must come from [`boost_env_new`] and not be used afterwards.
 */
void boost_env_free(struct BoostEnvHandle *env);

/**
 * # Safety
 * `env` must be a live handle; `obs` null or writable.
 */
enum BoostStatus boost_env_reset(struct BoostEnvHandle *env,
                                 uint64_t seed,
                                 struct BoostObservation *obs);

/**
 * Advances one control sample with the given duty.
 *
 * # Safety
 * `env` must be a live handle; `out` must be writable.
 */
enum BoostStatus boost_env_step(struct BoostEnvHandle *env, double duty, struct BoostStep *out);

/**
 * Builds a tanh network with an identity output layer.
 *
 * # Safety
 * `sizes` must point to `n_sizes` values; `out` must be writable.
 */
enum BoostStatus boost_mlp_new(const size_t *sizes,
                               size_t n_sizes,
                               uint64_t seed,
                               struct BoostMlpHandle **out);

/**
 * Loads a network checkpoint (JSON).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BoostStatus boost_mlp_load(const char *path, struct BoostMlpHandle **out);

/**
 * # Safety
 * `net` must come from this library and not be used afterwards.
 */
void boost_mlp_free(struct BoostMlpHandle *net);

/**
 * # Safety
 * `net` must be a live handle and `n_out` null or writable.
 */
enum BoostStatus boost_mlp_dims(const struct BoostMlpHandle *net, size_t *n_in, size_t *n_out);

/**
 * Forward pass; `input`/`output` lengths must match the network widths.
 *
 * # Safety
 * `input` must point to `n_in` values and `output` to `n_out` writable values.
 */
enum BoostStatus boost_mlp_forward(const struct BoostMlpHandle *net,
                                   const double *input,
                                   size_t n_in,
                                   double *output,
                                   size_t n_out);

/**
 * One PI sample with conditional-integration anti-windup; `integral` is
 * read and updated in place.
 *
 * # Safety
 * `integral` and `duty` must be writable.
 */
enum BoostStatus boost_pi_step(double kp,
                               double ki,
                               double *integral,
                               double error,
                               double dt,
                               double duty_min,
                               double duty_max,
                               double *duty);

/**
 * # Safety
 * `out` must be writable.
 */
enum BoostStatus boost_reward_step(double v_out,
                                   double v_ref,
                                   double v_up,
                                   double v_low,
                                   bool flag,
                                   struct BoostReward *out);

/**
 * Step-response metrics of a uniformly sampled output trace (2 % band).
 *
 * # Safety
 * `v_out` must point to `n` values; `out` must be writable.
 */
enum BoostStatus boost_step_metrics(const double *v_out,
                                    size_t n,
                                    double dt,
                                    double v_ref,
                                    struct BoostStepMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOOST_FFI_H */
