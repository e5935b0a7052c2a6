/* C interface of the wcop operator-dynamics toolkit. */

#ifndef WCOP_H
#define WCOP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum WcopStatus {
  // The call succeeded.
  WCOP_STATUS_OK = 0,
  // A required pointer argument was null.
  WCOP_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  WCOP_STATUS_INVALID_UTF8 = 2,
  // The scenario name does not refer to a catalog entry.
  WCOP_STATUS_UNKNOWN_SCENARIO = 3,
  // The overrides or index argument failed validation.
  WCOP_STATUS_INVALID_ARGUMENT = 4,
  // A diagnostic failed to evaluate.
  WCOP_STATUS_EVAL_ERROR = 5,
  // An internal panic was caught.
  WCOP_STATUS_PANIC = 6,
} WcopStatus;

// An opaque handle to the built-in scenario catalog.
typedef struct WcopCatalog WcopCatalog;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds the scenario catalog. Returns null only if construction panics.
struct WcopCatalog *wcop_catalog_new(void);

// Releases a catalog handle. Null is ignored.
//
// # Safety
// `catalog` must be a pointer returned by [`wcop_catalog_new`] that has not
// been freed yet.
void wcop_catalog_free(struct WcopCatalog *catalog);

// Number of scenarios in the catalog; 0 for a null handle.
//
// # Safety
// `catalog` must be a live pointer from [`wcop_catalog_new`] or null.
size_t wcop_catalog_len(const struct WcopCatalog *catalog);

// Writes the name of scenario `index` to `out` (caller frees).
//
// # Safety
// `catalog` must be a live pointer from [`wcop_catalog_new`]; `out` must be
// a valid location to store a string pointer.
enum WcopStatus wcop_catalog_name(const struct WcopCatalog *catalog, size_t index, char **out);

// Runs one scenario against its expectations and writes the JSON report to
// `out` (caller frees). `overrides_json` may be null for defaults; it
// accepts the same `overrides` object as the CLI configuration. The status
// is `Ok` even when expectations fail -- the verdict is the report's
// `all_pass` field.
//
// # Safety
// `catalog` must be a live pointer from [`wcop_catalog_new`]; `name` must
// point to a NUL-terminated string; `overrides_json` must be null or a
// NUL-terminated string; `out` must be valid for a store.
enum WcopStatus wcop_run_scenario(const struct WcopCatalog *catalog,
                                  const char *name,
                                  const char *overrides_json,
                                  char **out);

// Runs the whole catalog; the report is a JSON array of scenario reports.
//
// # Safety
// As for [`wcop_run_scenario`] without the name argument.
enum WcopStatus wcop_run_catalog(const struct WcopCatalog *catalog,
                                 const char *overrides_json,
                                 char **out);

// Writes the derivative-of-composition term table for a comma-separated
// multi-index (e.g. "2,1") as JSON to `out` (caller frees).
//
// # Safety
// `alpha_csv` must point to a NUL-terminated string; `out` must be valid
// for a store.
enum WcopStatus wcop_expansion_table(const char *alpha_csv, char **out);

// The most recent error message on this thread (caller frees), or null.
char *wcop_last_error(void);

// Static, human-readable name of a status code.
const char *wcop_status_name(enum WcopStatus status);

// Library version as a static string.
const char *wcop_version(void);

// Releases a string produced by this library. Null is ignored.
//
// # Safety
// `s` must be a pointer previously returned by one of this library's
// functions and not yet freed.
void wcop_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WCOP_H */
