#ifndef TEAMSHOCK_H
#define TEAMSHOCK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  // NULL pointer, invalid UTF-8 or an out-of-range argument.
  TS_STATUS_INVALID_ARGUMENT = 1,
  // The configuration or spec was rejected before any work.
  TS_STATUS_INVALID_CONFIG = 2,
  // A pipeline stage failed.
  TS_STATUS_STAGE_FAILED = 3,
  // No value for the requested key.
  TS_STATUS_NOT_FOUND = 4,
  // A Rust panic was caught at the boundary.
  TS_STATUS_PANIC = 5,
} TsStatus;

// Result of an in-memory analysis (select through effects).
typedef struct TsAnalysis TsAnalysis;

// Pipeline configuration.
typedef struct TsConfig TsConfig;

// Manifest of a completed run.
typedef struct TsManifest TsManifest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *ts_last_error(void);

void ts_clear_error(void);

// Library version as a static string.
const char *ts_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be NULL or a pointer obtained from this library, not yet freed.
void ts_string_free(char *s);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer.
enum TsStatus ts_config_new(struct TsConfig **out);

// Configuration from TOML text. Relative paths stay relative to the process
// working directory.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` a valid pointer.
enum TsStatus ts_config_from_toml(const char *toml, struct TsConfig **out);

// Configuration file; relative paths resolve against its directory.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid pointer.
enum TsStatus ts_config_load(const char *path, struct TsConfig **out);

// Sets one key. `value` is a TOML value (`2019`, `0.1`, `[1, 2]`,
// `"gbdt"`); text that does not parse as TOML is taken as a string.
//
// # Safety
// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
enum TsStatus ts_config_set(struct TsConfig *cfg, const char *key, const char *value);

// Checks the configuration invariants.
//
// # Safety
// `cfg` must be a live handle.
enum TsStatus ts_config_validate(const struct TsConfig *cfg);

// The configuration as TOML.
//
// # Safety
// `cfg` must be a live handle; `out` a valid pointer.
enum TsStatus ts_config_to_toml(const struct TsConfig *cfg, char **out);

// # Safety
// `cfg` must be NULL or a live handle.
void ts_config_free(struct TsConfig *cfg);

// Runs every stage and writes the outputs and `manifest.json`.
//
// # Safety
// `cfg` must be a live handle; `out` a valid pointer.
enum TsStatus ts_run_pipeline(const struct TsConfig *cfg, struct TsManifest **out);

// Number of files (inputs and outputs) recorded in the manifest.
//
// # Safety
// `m` must be a live handle.
size_t ts_manifest_file_count(const struct TsManifest *m);

// SHA-256 (hex) of a recorded file, by its manifest path.
//
// # Safety
// `m` must be a live handle; `path` NUL-terminated; `out` a valid pointer.
enum TsStatus ts_manifest_digest(const struct TsManifest *m, const char *path, char **out);

// The manifest as JSON.
//
// # Safety
// `m` must be a live handle; `out` a valid pointer.
enum TsStatus ts_manifest_to_json(const struct TsManifest *m, char **out);

// # Safety
// `m` must be NULL or a live handle.
void ts_manifest_free(struct TsManifest *m);

// Reads the configured inputs and estimates the effects without writing
// files. The heterogeneity regressions are skipped.
//
// # Safety
// `cfg` must be a live handle; `out` a valid pointer.
enum TsStatus ts_analyze(const struct TsConfig *cfg, struct TsAnalysis **out);

// Average effect for an outcome (0 = productivity, 1 = team size) and month.
//
// # Safety
// `a` must be a live handle; `out` a valid pointer.
enum TsStatus ts_analysis_ate(const struct TsAnalysis *a,
                              uint32_t outcome_code,
                              uint32_t month,
                              double *out);

// KS p-value of effects vs test residuals for an outcome and month.
//
// # Safety
// `a` must be a live handle; `out` a valid pointer.
enum TsStatus ts_analysis_ks_p(const struct TsAnalysis *a,
                               uint32_t outcome_code,
                               uint32_t month,
                               double *out);

// Number of target teams with effects.
//
// # Safety
// `a` must be a live handle.
size_t ts_analysis_target_count(const struct TsAnalysis *a);

// # Safety
// `a` must be NULL or a live handle.
void ts_analysis_free(struct TsAnalysis *a);

// Writes a synthetic corpus (events, profiles, languages, ground truth) into
// `dir`. `spec_toml` may be NULL for the default spec.
//
// # Safety
// `spec_toml` must be NULL or NUL-terminated; `dir` NUL-terminated.
enum TsStatus ts_synth_write(const char *spec_toml, uint64_t seed, const char *dir);

// Split-conformal half-width `d` of `n` residuals at miscoverage `alpha`.
// `d` is +infinity when there are too few residuals.
//
// # Safety
// `residuals` must point to `n` doubles; `out_d` a valid pointer.
enum TsStatus ts_conformal_halfwidth(const double *residuals,
                                     size_t n,
                                     double alpha,
                                     double *out_d);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
//
// # Safety
// `a`/`b` must point to `na`/`nb` doubles; outputs must be valid pointers.
enum TsStatus ts_ks_two_sample(const double *a,
                               size_t na,
                               const double *b,
                               size_t nb,
                               double *out_statistic,
                               double *out_p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEAMSHOCK_H */
