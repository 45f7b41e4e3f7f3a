#ifndef APO_DCSP_H
#define APO_DCSP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApoStatus {
  APO_STATUS_OK = 0,
  APO_STATUS_NULL_POINTER = 1,
  APO_STATUS_INVALID_ARGUMENT = 2,
  APO_STATUS_PARSE = 3,
  APO_STATUS_GENERATE = 4,
  APO_STATUS_SIMULATION = 5,
  APO_STATUS_CAP_EXCEEDED = 6,
  APO_STATUS_PANIC = 7,
} ApoStatus;

typedef enum ApoFamily {
  /**
   * Satisfiable by construction.
   */
  APO_FAMILY_MINTON = 0,
  APO_FAMILY_RANDOM = 1,
} ApoFamily;

typedef enum ApoProtocol {
  APO_PROTOCOL_APO = 0,
  APO_PROTOCOL_AWC = 1,
} ApoProtocol;

typedef enum ApoVerdict {
  APO_VERDICT_RUNNING = 0,
  APO_VERDICT_SOLVED = 1,
  APO_VERDICT_UNSATISFIABLE = 2,
  APO_VERDICT_CYCLE_LIMIT = 3,
} ApoVerdict;

/**
 * A constraint satisfaction instance.
 */
typedef struct ApoInstance ApoInstance;

/**
 * The outcome of one simulated trial.
 */
typedef struct ApoTrialResult ApoTrialResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *apo_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *apo_version(void);

/**
 * # Safety
 * `s` must be NULL or a pointer obtained from this library.
 */
void apo_string_free(char *s);

/**
 * Parses an instance from its text form.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum ApoStatus apo_instance_parse(const char *text, struct ApoInstance **out);

/**
 * Generates a coloring instance with `round(density * n)` edges.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ApoStatus apo_instance_generate_coloring(enum ApoFamily family,
                                              size_t n,
                                              double density,
                                              uint32_t k,
                                              uint64_t seed,
                                              struct ApoInstance **out);

/**
 * Generates a sensor field on the default 14 x 16 grid over 200 x 200 ft.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ApoStatus apo_instance_generate_sensor(size_t targets,
                                            double range,
                                            uint64_t seed,
                                            struct ApoInstance **out);

/**
 * # Safety
 * `inst` must be NULL or a handle from this library, not yet freed.
 */
void apo_instance_free(struct ApoInstance *inst);

/**
 * Variable count, or 0 for NULL.
 *
 * # Safety
 * `inst` must be NULL or a live handle.
 */
size_t apo_instance_num_variables(const struct ApoInstance *inst);

/**
 * Constraint count, or 0 for NULL.
 *
 * # Safety
 * `inst` must be NULL or a live handle.
 */
size_t apo_instance_num_constraints(const struct ApoInstance *inst);

/**
 * Serializes the instance; free the result with [`apo_string_free`].
 *
 * # Safety
 * `inst` must be a live handle and `out` a valid pointer.
 */
enum ApoStatus apo_instance_to_text(const struct ApoInstance *inst, char **out);

/**
 * Decides satisfiability by exhaustive search over at most `cap`
 * assignments.
 *
 * # Safety
 * `inst` must be a live handle and `satisfiable` a valid pointer.
 */
enum ApoStatus apo_instance_brute_force(const struct ApoInstance *inst,
                                        uint64_t cap,
                                        bool *satisfiable);

/**
 * Runs one trial from initial values drawn with `value_seed`.
 *
 * # Safety
 * `inst` must be a live handle and `out` a valid pointer.
 */
enum ApoStatus apo_run_trial(const struct ApoInstance *inst,
                             enum ApoProtocol protocol,
                             uint64_t value_seed,
                             uint64_t cycle_limit,
                             bool trace,
                             struct ApoTrialResult **out);

/**
 * # Safety
 * `r` must be NULL or a handle from this library, not yet freed.
 */
void apo_trial_free(struct ApoTrialResult *r);

/**
 * # Safety
 * `r` must be NULL or a live handle.
 */
enum ApoVerdict apo_trial_verdict(const struct ApoTrialResult *r);

/**
 * Simulated cycles. Returns 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
uint64_t apo_trial_cycles(const struct ApoTrialResult *r);

/**
 * Messages sent. Returns 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
uint64_t apo_trial_messages(const struct ApoTrialResult *r);

/**
 * Modeled message bytes. Returns 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
uint64_t apo_trial_bytes(const struct ApoTrialResult *r);

/**
 * Abstract work: constraint checks plus search nodes. Returns 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
uint64_t apo_trial_work(const struct ApoTrialResult *r);

/**
 * Mediation sessions opened. Returns 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
uint64_t apo_trial_sessions(const struct ApoTrialResult *r);

/**
 * Invariant violations detected. Returns 0 for NULL.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
uint64_t apo_trial_violations(const struct ApoTrialResult *r);

/**
 * Final assignment as `variable value` lines, in variable order.
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum ApoStatus apo_trial_assignment_text(const struct ApoTrialResult *r, char **out);

/**
 * Message trace as `cycle sender receiver kind size` lines. Fails unless
 * the trial ran with tracing.
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum ApoStatus apo_trial_trace_text(const struct ApoTrialResult *r, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APO_DCSP_H */
