#ifndef FTQC_H
#define FTQC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first four match the `ftqc` command-line exit codes.
 */
typedef enum FtqcStatus {
  FTQC_STATUS_OK = 0,
  FTQC_STATUS_INTERNAL = 1,
  FTQC_STATUS_CONFIG = 2,
  FTQC_STATUS_INFEASIBLE = 3,
  FTQC_STATUS_NULL_POINTER = 4,
  FTQC_STATUS_INVALID_UTF8 = 5,
  FTQC_STATUS_ESTIMATE = 6,
  FTQC_STATUS_FORMULA = 7,
} FtqcStatus;

/**
 * A parsed formula.
 */
typedef struct FtqcFormula FtqcFormula;

/**
 * A validated job ready to estimate.
 */
typedef struct FtqcJob FtqcJob;

/**
 * A finished estimate.
 */
typedef struct FtqcReport FtqcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a JSON job. `base_dir` resolves a relative `tracePath` and may be
 * null for the current directory.
 *
 * # Safety
 * `json` and `base_dir` must be null or NUL-terminated; `out` must be valid
 * for writes.
 */
enum FtqcStatus ftqc_job_from_json(const char *json, const char *base_dir, struct FtqcJob **out);

/**
 * # Safety
 * `job` must be null or come from [`ftqc_job_from_json`] and not be freed.
 */
void ftqc_job_free(struct FtqcJob *job);

/**
 * Runs the estimate for `job`.
 *
 * # Safety
 * `job` must be a live job; `out` must be valid for writes.
 */
enum FtqcStatus ftqc_estimate(const struct FtqcJob *job, struct FtqcReport **out);

/**
 * # Safety
 * `report` must be null or come from [`ftqc_estimate`] and not be freed.
 */
void ftqc_report_free(struct FtqcReport *report);

/**
 * Serializes the full report as JSON.
 *
 * # Safety
 * `report` must be a live report; `out` must be valid for writes.
 */
enum FtqcStatus ftqc_report_to_json(const struct FtqcReport *report, char **out);

/**
 * Total physical qubits, or 0 for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
uint64_t ftqc_report_physical_qubits(const struct FtqcReport *report);

/**
 * Runtime in nanoseconds, or NaN for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
double ftqc_report_runtime_ns(const struct FtqcReport *report);

/**
 * Reliable quantum operations per second, or NaN for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
double ftqc_report_rqops(const struct FtqcReport *report);

/**
 * Code distance, or 0 for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
uint32_t ftqc_report_code_distance(const struct FtqcReport *report);

/**
 * Number of T-factory copies, or 0 for a null report.
 *
 * # Safety
 * `report` must be null or a live report.
 */
uint64_t ftqc_report_t_factory_copies(const struct FtqcReport *report);

/**
 * # Safety
 * `source` must be null or NUL-terminated; `out` must be valid for writes.
 */
enum FtqcStatus ftqc_formula_parse(const char *source, struct FtqcFormula **out);

/**
 * Evaluates `formula` with `count` variables bound by name.
 *
 * # Safety
 * `names` and `values` must each point to `count` elements (or be null when
 * `count` is 0); every name must be NUL-terminated; `out` must be valid for
 * writes.
 */
enum FtqcStatus ftqc_formula_eval(const struct FtqcFormula *formula,
                                  const char *const *names,
                                  const double *values,
                                  size_t count,
                                  double *out);

/**
 * # Safety
 * `formula` must be null or come from [`ftqc_formula_parse`] and not be freed.
 */
void ftqc_formula_free(struct FtqcFormula *formula);

/**
 * Lists the hardware profiles as a JSON array.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum FtqcStatus ftqc_profiles_json(char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void ftqc_string_free(char *s);

/**
 * Message for the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ftqc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ftqc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FTQC_H */
