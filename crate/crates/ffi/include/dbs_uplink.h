#ifndef DBS_UPLINK_H
#define DBS_UPLINK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DbsStatus {
  DBS_STATUS_OK = 0,
  DBS_STATUS_NULL_ARGUMENT = 1,
  DBS_STATUS_INVALID_UTF8 = 2,
  DBS_STATUS_INVALID_SCENARIO = 3,
  DBS_STATUS_CAPS_EXCEEDED = 4,
  DBS_STATUS_SOLVE_FAILED = 5,
  DBS_STATUS_OUT_OF_RANGE = 6,
  DBS_STATUS_PANIC = 7,
} DbsStatus;

typedef enum DbsAlgorithm {
  DBS_ALGORITHM_AA_BUD = 0,
  DBS_ALGORITHM_HD_DBS = 1,
  DBS_ALGORITHM_S_MBS = 2,
  DBS_ALGORITHM_EXACT_BUD = 3,
} DbsAlgorithm;

/**
 * Opaque network scenario.
 */
typedef struct DbsScenario DbsScenario;

/**
 * Opaque solver output.
 */
typedef struct DbsSolution DbsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library on this thread.
 */
const char *dbs_last_error(void);

/**
 * Parses a scenario from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum DbsStatus dbs_scenario_from_json(const char *json, struct DbsScenario **out);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum DbsStatus dbs_scenario_load(const char *path, struct DbsScenario **out);

/**
 * Generates a scenario with default parameters and the given sizes.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DbsStatus dbs_scenario_generate(uint64_t seed,
                                     size_t ue_count,
                                     size_t drone_count,
                                     size_t grid_sites,
                                     struct DbsScenario **out);

/**
 * Number of UEs, or 0 for NULL.
 *
 * # Safety
 * `scenario` must be NULL or a live handle.
 */
size_t dbs_scenario_ue_count(const struct DbsScenario *scenario);

/**
 * Number of drones, or 0 for NULL.
 *
 * # Safety
 * `scenario` must be NULL or a live handle.
 */
size_t dbs_scenario_drone_count(const struct DbsScenario *scenario);

/**
 * # Safety
 * `scenario` must be NULL or a handle not yet freed.
 */
void dbs_scenario_free(struct DbsScenario *scenario);

/**
 * Runs `algorithm` on `scenario`.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum DbsStatus dbs_solve(const struct DbsScenario *scenario,
                         enum DbsAlgorithm algorithm,
                         struct DbsSolution **out);

/**
 * Total served throughput in bit/s, or 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live handle.
 */
double dbs_solution_throughput_bps(const struct DbsSolution *solution);

/**
 * Blocked share of the total demand, or 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live handle.
 */
double dbs_solution_block_ratio(const struct DbsSolution *solution);

/**
 * Number of placed drones, or 0 for NULL.
 *
 * # Safety
 * `solution` must be NULL or a live handle.
 */
size_t dbs_solution_drone_count(const struct DbsSolution *solution);

/**
 * Writes the position of drone `index` to `xyz[0..3]` in meters.
 *
 * # Safety
 * `solution` must be a live handle and `xyz` point to three doubles.
 */
enum DbsStatus dbs_solution_drone_position(const struct DbsSolution *solution,
                                           size_t index,
                                           double *xyz);

/**
 * Serving station id of UE `index`, -1 when blocked.
 *
 * # Safety
 * `solution` must be a live handle and `station_id` a valid pointer.
 */
enum DbsStatus dbs_solution_ue_station(const struct DbsSolution *solution,
                                       size_t index,
                                       int64_t *station_id);

/**
 * Full report as JSON; release with [`dbs_string_free`].
 *
 * # Safety
 * `solution` must be a live handle and `out` a valid pointer.
 */
enum DbsStatus dbs_solution_to_json(const struct DbsSolution *solution, char **out);

/**
 * # Safety
 * `solution` must be NULL or a handle not yet freed.
 */
void dbs_solution_free(struct DbsSolution *solution);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void dbs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DBS_UPLINK_H */
