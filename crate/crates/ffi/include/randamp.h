#ifndef RANDAMP_H
#define RANDAMP_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RandampStatus {
  RANDAMP_STATUS_OK = 0,
  RANDAMP_STATUS_NULL_POINTER = 1,
  RANDAMP_STATUS_INVALID_BOX = 2,
  RANDAMP_STATUS_INVALID_PARAMETER = 3,
  RANDAMP_STATUS_SOLVER = 4,
  RANDAMP_STATUS_CERTIFICATION_FAILED = 5,
  RANDAMP_STATUS_SIZE_GUARD = 6,
  RANDAMP_STATUS_OUT_OF_RANGE = 7,
  RANDAMP_STATUS_BUFFER_TOO_SMALL = 8,
  RANDAMP_STATUS_PANIC = 9,
  RANDAMP_STATUS_OTHER = 10,
} RandampStatus;

/**
 * Santha-Vazirani source behaviour for simulations.
 */
typedef enum RandampSvKind {
  RANDAMP_SV_KIND_HONEST = 0,
  /**
   * Every bit leans toward 0 by the full ε.
   */
  RANDAMP_SV_KIND_GREEDY_ZEROS = 1,
  /**
   * Every bit has the same bias ε.
   */
  RANDAMP_SV_KIND_CONSTANT = 2,
} RandampSvKind;

/**
 * Four-party no-signaling box.
 */
typedef struct RandampBox RandampBox;

/**
 * Finished batch of simulated protocol runs.
 */
typedef struct RandampSimulation RandampSimulation;

/**
 * Scalar protocol parameters; per-device use counts are passed separately.
 */
typedef struct RandampParams {
  double epsilon;
  double delta;
  double mu;
  size_t k;
  double t;
} RandampParams;

/**
 * Closed-form probability bounds for `params`.
 */
typedef struct RandampBounds {
  /**
   * Rejection probability lower bound for devices that are not (μ, δ)-good.
   */
  double soundness;
  /**
   * Acceptance probability lower bound for honest devices under the noise threshold.
   */
  double completeness;
  /**
   * Largest honest Bell value tolerated.
   */
  double noise_threshold;
  /**
   * `log₂` of the LP term of the final distance bound.
   */
  double lp_term_log2;
  double estimation_term;
  double definetti_term;
  /**
   * Sum of the three terms; may be infinite.
   */
  double total;
} RandampBounds;

/**
 * Summary of a finished simulation. `d` and `d_c` are NaN when no run was accepted.
 */
typedef struct RandampSimulationSummary {
  uint64_t trials;
  uint64_t accepted;
  double acceptance_rate;
  double d;
  double d_c;
  double d_sigma;
} RandampSimulationSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`) and returns the full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t randamp_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *randamp_version(void);

/**
 * Builds a box from 256 probabilities in outcome-major order (`p[x*16 + u]`).
 *
 * # Safety
 * `p` must point to `len` doubles; `out` must be writable.
 */
enum RandampStatus randamp_box_from_table(const double *p, size_t len, struct RandampBox **out_box);

/**
 * The box with every outcome equally likely.
 */
struct RandampBox *randamp_box_uniform(void);

/**
 * Quantum box from the four-qubit state with white-noise weight `state_mixing` and every
 * basis rotated by `basis_rotation` radians.
 *
 * # Safety
 * `out_box` must be writable.
 */
enum RandampStatus randamp_box_quantum(double state_mixing,
                                       double basis_rotation,
                                       struct RandampBox **out_box);

/**
 * Releases a box. Null is ignored.
 *
 * # Safety
 * `b` must come from this library and not be used afterwards.
 */
void randamp_box_free(struct RandampBox *b);

/**
 * Value of the Bell functional (0 is the algebraic minimum, 2 the local bound).
 *
 * # Safety
 * `b` must be a live box; `value` must be writable.
 */
enum RandampStatus randamp_box_bell_value(const struct RandampBox *b, double *value);

/**
 * `P(x | u)` for 4-bit outcome and setting indices.
 *
 * # Safety
 * `b` must be a live box; `value` must be writable.
 */
enum RandampStatus randamp_box_prob(const struct RandampBox *b,
                                    uint8_t x,
                                    uint8_t u,
                                    double *value);

/**
 * Copies the 256-entry table into `buf`.
 *
 * # Safety
 * `b` must be a live box; `buf` must hold `len` doubles.
 */
enum RandampStatus randamp_box_table(const struct RandampBox *b, double *buf, size_t len);

/**
 * Whether a raw table is a valid no-signaling distribution within `tol`.
 *
 * # Safety
 * `p` must point to `len` doubles; `result` must be writable.
 */
enum RandampStatus randamp_is_no_signaling(const double *p, size_t len, double tol, bool *result);

/**
 * `min((11 + 7δ)/32, 1/2)`.
 */
double randamp_predictability_bound(double delta);

/**
 * Largest `P(maj = guess) − 1/2` over no-signaling boxes with Bell value at most `delta`
 * at the given inequality setting.
 *
 * # Safety
 * `value` must be writable.
 */
enum RandampStatus randamp_lp_max_bias(double delta, uint8_t setting, uint8_t guess, double *value);

/**
 * Solves all 16 instances at `delta` with both back-ends and reports the largest optimum
 * and whether it stays below the bound with the back-ends in agreement.
 *
 * # Safety
 * Out-pointers must be writable.
 */
enum RandampStatus randamp_certify(double delta, double *max_optimum, bool *pass);

/**
 * Threshold on the observed Bell statistic below which the protocol accepts.
 *
 * # Safety
 * `params` must be readable; `value` writable.
 */
enum RandampStatus randamp_acceptance_threshold(const struct RandampParams *params, double *value);

/**
 * # Safety
 * `params` must be readable; `bounds` writable.
 */
enum RandampStatus randamp_bounds(const struct RandampParams *params, struct RandampBounds *bounds);

/**
 * Runs `trials` protocol runs with every device an i.i.d. copy of `device`, fed by the
 * given source. `n` holds `params.k` per-device use counts. Deterministic in `seed`.
 *
 * # Safety
 * `params` and `device` must be readable, `n` must hold `params.k` values, `out_sim` writable.
 */
enum RandampStatus randamp_simulate(const struct RandampParams *params,
                                    const uint64_t *n,
                                    const struct RandampBox *device,
                                    enum RandampSvKind sv,
                                    uint64_t trials,
                                    uint64_t seed,
                                    struct RandampSimulation **out_sim);

/**
 * # Safety
 * `sim` must be live; `summary` writable.
 */
enum RandampStatus randamp_simulation_summary(const struct RandampSimulation *sim,
                                              struct RandampSimulationSummary *summary);

/**
 * Output of run `trial`: 0 or 1 when accepted, −1 when the run aborted.
 *
 * # Safety
 * `sim` must be live; `bit` writable.
 */
enum RandampStatus randamp_simulation_output(const struct RandampSimulation *sim,
                                             uint64_t trial,
                                             int8_t *bit);

/**
 * Releases a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`randamp_simulate`] and not be used afterwards.
 */
void randamp_simulation_free(struct RandampSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDAMP_H */
