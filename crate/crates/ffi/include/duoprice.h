#ifndef DUOPRICE_H
#define DUOPRICE_H

/* Generated by cbindgen from the duoprice-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a fallible library call.
typedef enum DpStatus {
  // The call succeeded.
  DP_STATUS_OK = 0,
  // The inputs were rejected (malformed JSON, invalid scenario, bad
  // arguments).
  DP_STATUS_INVALID_INPUT = 1,
  // A construction's premise does not hold on this scenario.
  DP_STATUS_PREMISE_FAILED = 2,
  // An internal failure; file a bug.
  DP_STATUS_INTERNAL = 3,
} DpStatus;

// Opaque handle to a validated scenario (market, settings, digest).
typedef struct DpScenario DpScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string; do not free.
const char *dp_version(void);

// Most recent error message on this thread, or null when the last call
// succeeded. The caller owns the returned string (free with
// `dp_string_free`).
char *dp_last_error_message(void);

// Parse and validate a scenario from JSON. Returns null on failure (consult
// `dp_last_error_message`). The handle must be freed with
// `dp_scenario_free`.
//
// # Safety
// `json` must be null or point to a NUL-terminated string.
struct DpScenario *dp_scenario_from_json(const char *json);

// The bundled reference scenario. The handle must be freed with
// `dp_scenario_free`.
struct DpScenario *dp_scenario_reference(void);

// Digest identifying the scenario's content. The caller owns the returned
// string; null only on internal failure.
//
// # Safety
// `scenario` must be a live handle from this library or null.
char *dp_scenario_digest(const struct DpScenario *scenario);

// Release a scenario handle. Null is ignored.
//
// # Safety
// `scenario` must be null or a handle returned by this library that has not
// been freed yet.
void dp_scenario_free(struct DpScenario *scenario);

// Run one analysis request against the scenario.
//
// `request_json` is a JSON object tagged by `command`, e.g.
// `{"command":"find-bne"}`, `{"command":"check-bne","pf":0.0,"pl":0.4676,
// "cutoff":0.595,"low":1}`, or `{"command":"innovate","innovator":1,
// "construction":"positive-profit","t_bar":0.9}`. On success `*out_json`
// receives the JSON report (free with `dp_string_free`).
//
// # Safety
// `scenario` must be a live handle; `request_json` a NUL-terminated string;
// `out_json` a valid location to store a pointer.
enum DpStatus dp_analyze(const struct DpScenario *scenario,
                         const char *request_json,
                         char **out_json);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library that has not been
// freed yet.
void dp_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DUOPRICE_H */
