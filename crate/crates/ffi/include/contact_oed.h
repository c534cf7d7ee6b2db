#ifndef CONTACT_OED_H
#define CONTACT_OED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CoedStatus {
  COED_STATUS_OK = 0,
  COED_STATUS_NULL_POINTER = 1,
  COED_STATUS_INVALID_ARGUMENT = 2,
  COED_STATUS_INVALID_CONFIG = 3,
  COED_STATUS_UNKNOWN_SCENARIO = 4,
  /**
   * A covariance or information matrix is not symmetric positive (semi)definite.
   */
  COED_STATUS_INVALID_MATRIX = 5,
  /**
   * A rollout diverged or no candidate plan could be scored.
   */
  COED_STATUS_DIVERGED = 6,
  COED_STATUS_IO = 7,
  COED_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  COED_STATUS_PANIC = 9,
} CoedStatus;

typedef enum CoedEngine {
  COED_ENGINE_CONTACT_AWARE = 0,
  COED_ENGINE_BASELINE = 1,
} CoedEngine;

/**
 * Opaque record of a finished active-learning run.
 */
typedef struct CoedRun CoedRun;

/**
 * Opaque scenario definition.
 */
typedef struct CoedScenario CoedScenario;

/**
 * K (N/m), C (N·s/m), μ, R (N·s/m).
 */
typedef struct CoedContactParams {
  double stiffness;
  double damping;
  double friction;
  double resistance;
} CoedContactParams;

typedef struct CoedContactState {
  double phi_n;
  double v_n;
  double v_t;
} CoedContactState;

typedef struct CoedContactForce {
  double lambda_n;
  double lambda_t;
} CoedContactForce;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none failed yet.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *coed_last_error_message(void);

/**
 * Static, nul-terminated name of a status code.
 */
const char *coed_status_name(enum CoedStatus status);

const char *coed_version(void);

/**
 * Creates one of the built-in scenarios: "hefting", "rubbing", "pinching" or "contouring".
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a writable pointer.
 */
enum CoedStatus coed_scenario_new(const char *name, struct CoedScenario **out);

/**
 * # Safety
 * `scenario` must come from [`coed_scenario_new`] and not be used afterwards.
 */
void coed_scenario_free(struct CoedScenario *scenario);

/**
 * Number of estimated parameters.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum CoedStatus coed_scenario_param_count(const struct CoedScenario *scenario, size_t *out);

/**
 * Ground-truth parameter values θ*.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum CoedStatus coed_scenario_true_params(const struct CoedScenario *scenario,
                                          double *buf,
                                          size_t len);

/**
 * Moves the prior mode, keeping its covariance and support.
 *
 * # Safety
 * `values` must hold `len` doubles.
 */
enum CoedStatus coed_scenario_set_prior_mode(struct CoedScenario *scenario,
                                             const double *values,
                                             size_t len);

/**
 * Evaluates the soft contact law.
 *
 * # Safety
 * All pointers must be valid.
 */
enum CoedStatus coed_contact_force(const struct CoedContactParams *params,
                                   const struct CoedContactState *state,
                                   bool signed_damping,
                                   struct CoedContactForce *out);

/**
 * Jacobian of (λ_n, λ_t): `wrt_params` receives 2×4 entries over (K, C, μ, R),
 * `wrt_state` 2×3 entries over (φ_n, v_n, v_t), both row-major. Either may be null.
 *
 * # Safety
 * Non-null outputs must hold 8 and 6 doubles respectively.
 */
enum CoedStatus coed_contact_force_grad(const struct CoedContactParams *params,
                                        const struct CoedContactState *state,
                                        double *wrt_params,
                                        double *wrt_state);

/**
 * Runs `k_max` rounds of plan, execute, estimate on a copy of `scenario`.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum CoedStatus coed_run_new(const struct CoedScenario *scenario,
                             uint64_t seed,
                             size_t k_max,
                             enum CoedEngine engine,
                             struct CoedRun **out);

/**
 * Runs from a TOML configuration, applied on top of the defaults of the scenario it names.
 *
 * # Safety
 * `config` must be a nul-terminated string and `out` writable.
 */
enum CoedStatus coed_run_from_config(const char *config, struct CoedRun **out);

/**
 * # Safety
 * `run` must come from a `coed_run_*` constructor and not be used afterwards.
 */
void coed_run_free(struct CoedRun *run);

/**
 * Number of completed experiments; 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t coed_run_experiment_count(const struct CoedRun *run);

/**
 * Belief mode after experiment `k`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum CoedStatus coed_run_theta(const struct CoedRun *run, size_t k, double *buf, size_t len);

/**
 * trace(Σ) after experiment `k`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CoedStatus coed_run_trace_covariance(const struct CoedRun *run, size_t k, double *out);

/**
 * trace(F) of experiment `k` at its estimate.
 *
 * # Safety
 * `out` must be writable.
 */
enum CoedStatus coed_run_trace_information(const struct CoedRun *run, size_t k, double *out);

/**
 * Euclidean norm of the final per-parameter percent errors.
 *
 * # Safety
 * `out` must be writable.
 */
enum CoedStatus coed_run_final_error(const struct CoedRun *run, double *out);

/**
 * Writes config, CSV logs and JSON summaries into `dir`.
 *
 * # Safety
 * `dir` must be a nul-terminated path.
 */
enum CoedStatus coed_run_write(const struct CoedRun *run, const char *dir);

/**
 * Posterior covariance `(F + Σ⁻¹)⁻¹` for a `dim`×`dim` prior covariance and information matrix.
 *
 * # Safety
 * `prior_cov`, `fim` and `out_cov` must each hold `dim * dim` doubles.
 */
enum CoedStatus coed_belief_update(size_t dim,
                                   const double *prior_cov,
                                   const double *fim,
                                   double *out_cov);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTACT_OED_H */
