#ifndef SKEWMIX_H
#define SKEWMIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SkewmixStatus {
  SKEWMIX_STATUS_OK = 0,
  SKEWMIX_STATUS_IO = 1,
  /**
   * Invalid configuration or input values.
   */
  SKEWMIX_STATUS_CONFIG = 2,
  /**
   * Preimage-tree or orbit budget exceeded.
   */
  SKEWMIX_STATUS_BUDGET = 3,
  /**
   * Numerical non-convergence.
   */
  SKEWMIX_STATUS_NUMERICAL = 4,
  SKEWMIX_STATUS_NULL_POINTER = 10,
  /**
   * Not UTF-8, or an unknown command name.
   */
  SKEWMIX_STATUS_INVALID_ARGUMENT = 11,
  /**
   * A Rust panic was caught at the boundary.
   */
  SKEWMIX_STATUS_PANIC = 12,
} SkewmixStatus;

typedef enum SkewmixVerdict {
  SKEWMIX_VERDICT_EXPONENTIAL_MIXING = 0,
  SKEWMIX_VERDICT_ESSENTIAL_COBOUNDARY_INTEGRAL = 1,
  SKEWMIX_VERDICT_ESSENTIAL_COBOUNDARY_NON_INTEGRAL = 2,
  SKEWMIX_VERDICT_INCONCLUSIVE = 3,
} SkewmixVerdict;

/**
 * Opaque experiment handle.
 */
typedef struct SkewmixLab SkewmixLab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into the library from this thread.
 */
const char *skewmix_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *skewmix_version(void);

/**
 * Build a lab from TOML text. On success `*out` receives a handle.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum SkewmixStatus skewmix_lab_from_toml(const char *toml, struct SkewmixLab **out);

/**
 * Build a lab from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SkewmixStatus skewmix_lab_from_file(const char *path, struct SkewmixLab **out);

/**
 * # Safety
 * `lab` must come from this library and not be used afterwards. NULL is a no-op.
 */
void skewmix_lab_free(struct SkewmixLab *lab);

/**
 * Apply one `KEY=VALUE` override with a dotted key, e.g. `"spectral.k=128"`.
 * The handle is unchanged if the result does not validate.
 *
 * # Safety
 * `lab` must be a live handle; `assignment` a NUL-terminated string.
 */
enum SkewmixStatus skewmix_lab_set(struct SkewmixLab *lab, const char *assignment);

/**
 * # Safety
 * `lab` must be a live handle.
 */
enum SkewmixStatus skewmix_lab_set_seed(struct SkewmixLab *lab, uint64_t seed);

/**
 * Current configuration as TOML; free with `skewmix_string_free`.
 *
 * # Safety
 * `lab` must be a live handle; `out` must be writable.
 */
enum SkewmixStatus skewmix_lab_config_toml(const struct SkewmixLab *lab, char **out);

/**
 * Run a subcommand (`density`, `twist-spectrum`, `symbol-bound`, `livsic`,
 * `correlate`, `dichotomy`) and return its JSON document. Nothing is
 * written to disk.
 *
 * # Safety
 * `lab` must be a live handle; `command` a NUL-terminated string; `json`
 * must be writable. Free `*json` with `skewmix_string_free`.
 */
enum SkewmixStatus skewmix_lab_run(const struct SkewmixLab *lab, const char *command, char **json);

/**
 * Run the full dichotomy and store the verdict. `json` may be NULL; if not,
 * it receives the same document as `skewmix_lab_run(lab, "dichotomy", …)`.
 *
 * # Safety
 * `lab` must be a live handle; `verdict` must be writable.
 */
enum SkewmixStatus skewmix_lab_verdict(const struct SkewmixLab *lab,
                                       enum SkewmixVerdict *verdict,
                                       char **json);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. NULL is a no-op.
 */
void skewmix_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKEWMIX_H */
