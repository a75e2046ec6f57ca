#ifndef ANOSOV_LAB_H
#define ANOSOV_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; 2, 3 and 4 match the command-line exit codes.
 */
typedef enum {
  AL_STATUS_OK = 0,
  /**
   * Invalid config, unknown name or bad argument value.
   */
  AL_STATUS_CONFIG = 2,
  /**
   * A numerical routine failed.
   */
  AL_STATUS_NUMERIC = 3,
  /**
   * An enumeration or dimension budget was exceeded.
   */
  AL_STATUS_BUDGET = 4,
  AL_STATUS_NULL_POINTER = 5,
  AL_STATUS_INVALID_UTF8 = 6,
  AL_STATUS_NOT_FOUND = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  AL_STATUS_PANIC = 8,
} AlStatus;

/**
 * Parsed experiment config.
 */
typedef struct AlConfig AlConfig;

/**
 * Result of one subcommand.
 */
typedef struct AlOutcome AlOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty when none. Valid
 * until the next call on the same thread.
 */
const char *al_last_error(void);

/**
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
AlStatus al_config_parse(const char *toml, AlConfig **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
AlStatus al_config_load(const char *path, AlConfig **out);

/**
 * # Safety
 * `config` must come from `al_config_parse` or `al_config_load` and not
 * have been freed; null is ignored.
 */
void al_config_free(AlConfig *config);

/**
 * Runs a subcommand (`"group"`, `"kappa"`, `"exponent"`, `"poincare"`,
 * `"measure"`, `"cusp"`, `"integral"`, `"cone"` or `"report"`).
 * A negative `radius` keeps the config value, as does `has_seed = false`
 * for the seed; `phi` may be null.
 *
 * # Safety
 * `config` must be a live handle, `name` a NUL-terminated string, `phi`
 * null or NUL-terminated, and `out` a valid pointer.
 */
AlStatus al_run(const AlConfig *config,
                const char *name,
                int64_t radius,
                bool has_seed,
                uint64_t seed,
                const char *phi,
                AlOutcome **out);

/**
 * # Safety
 * `outcome` must come from `al_run` and not have been freed; null is
 * ignored.
 */
void al_outcome_free(AlOutcome *outcome);

/**
 * # Safety
 * `outcome` must be a live handle, `name` NUL-terminated and `value` a
 * valid pointer.
 */
AlStatus al_outcome_metric(const AlOutcome *outcome, const char *name, double *value);

/**
 * Number of checks that failed, or -1 when the outcome has none.
 *
 * # Safety
 * `outcome` must be a live handle.
 */
int64_t al_outcome_failed_checks(const AlOutcome *outcome);

/**
 * The outcome as a JSON document, or null on failure. Free with
 * `al_string_free`.
 *
 * # Safety
 * `outcome` must be a live handle.
 */
char *al_outcome_json(const AlOutcome *outcome);

/**
 * # Safety
 * `s` must come from this library and not have been freed; null is
 * ignored.
 */
void al_string_free(char *s);

/**
 * Cartan projection of one `d × d` matrix given row-major: writes the
 * `d` sorted log singular values to `out`. With `projective`, the matrix
 * is taken in `PSL(d)`; `|det|` must be 1 within the library tolerance.
 *
 * # Safety
 * `rows` must point to `d·d` doubles and `out` to room for `d` doubles.
 */
AlStatus al_cartan_projection(const double *rows, uintptr_t d, bool projective, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANOSOV_LAB_H */
