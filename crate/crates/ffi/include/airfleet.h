/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef AIRFLEET_H
#define AIRFLEET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AfSearchMode {
  AF_SEARCH_MODE_NEIGHBOURHOOD = 0,
  AF_SEARCH_MODE_TABU = 1,
} AfSearchMode;

// Result code of every call.
typedef enum AfStatus {
  AF_STATUS_OK = 0,
  AF_STATUS_NULL_POINTER = 1,
  AF_STATUS_INVALID_ARGUMENT = 2,
  AF_STATUS_PARSE = 3,
  AF_STATUS_VALIDATION = 4,
  // No feasible schedule exists or construction failed.
  AF_STATUS_INFEASIBLE = 5,
  // Exact search stopped on its budget; any schedule returned is the best found.
  AF_STATUS_BUDGET_EXHAUSTED = 6,
  AF_STATUS_IO = 7,
  AF_STATUS_PANIC = 8,
} AfStatus;

// An instance with its travel-time matrix.
typedef struct AfInstance AfInstance;

typedef struct AfSchedule AfSchedule;

// Search options. Obtain defaults from [`af_search_options_default`].
typedef struct AfSearchOptions {
  enum AfSearchMode mode;
  uint32_t tabu_tenure;
  uint64_t seed;
  bool permute_scan_order;
  bool parallel_eval;
} AfSearchOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *af_last_error(void);

// Library version as a static string.
const char *af_version(void);

// Loads an instance from a JSON file or a CSV directory.
//
// # Safety
// `path` must be a nul-terminated string; `out` must be writable.
enum AfStatus af_instance_load(const char *path, struct AfInstance **out);

// Parses an instance from JSON text.
//
// # Safety
// `json` must be a nul-terminated string; `out` must be writable.
enum AfStatus af_instance_from_json(const char *json, struct AfInstance **out);

// # Safety
// `instance` must come from this library and not be freed twice; null is ignored.
void af_instance_free(struct AfInstance *instance);

// # Safety
// `instance` must be a live handle; the out pointers must be writable.
enum AfStatus af_instance_size(const struct AfInstance *instance, size_t *missions, size_t *bases);

// Builds a feasible start schedule. Returns `Infeasible` when construction fails.
//
// # Safety
// `instance` must be a live handle; `out` must be writable.
enum AfStatus af_construct(const struct AfInstance *instance, struct AfSchedule **out);

struct AfSearchOptions af_search_options_default(void);

// Improves a feasible `start` schedule by local search into a new handle.
//
// # Safety
// `instance` and `start` must be live handles; `options` may be null for
// defaults; `out` must be writable.
enum AfStatus af_search(const struct AfInstance *instance,
                        const struct AfSchedule *start,
                        const struct AfSearchOptions *options,
                        struct AfSchedule **out);

// Exact branch and bound.
//
// `time_budget_seconds <= 0` means no time limit and `node_budget == 0`
// means no node limit. Returns `Ok` with the optimum, `Infeasible` with a
// null schedule, or `BudgetExhausted` with the best schedule found (null
// if none).
//
// # Safety
// `instance` must be a live handle; `out` must be writable.
enum AfStatus af_solve_exact(const struct AfInstance *instance,
                             double time_budget_seconds,
                             uint64_t node_budget,
                             struct AfSchedule **out);

// Total flight hours of a schedule.
//
// # Safety
// Handles must be live; `hours` must be writable.
enum AfStatus af_schedule_objective(const struct AfInstance *instance,
                                    const struct AfSchedule *schedule,
                                    double *hours);

// Whether a schedule satisfies every constraint.
//
// # Safety
// Handles must be live; `feasible` must be writable.
enum AfStatus af_schedule_is_feasible(const struct AfInstance *instance,
                                      const struct AfSchedule *schedule,
                                      bool *feasible);

// Schedule as JSON routes keyed by base and mission ids. Release the
// string with [`af_string_free`].
//
// # Safety
// Handles must be live; `out` must be writable.
enum AfStatus af_schedule_to_json(const struct AfInstance *instance,
                                  const struct AfSchedule *schedule,
                                  char **out);

// # Safety
// `s` must come from this library; null is ignored.
void af_string_free(char *s);

// # Safety
// `schedule` must come from this library and not be freed twice; null is ignored.
void af_schedule_free(struct AfSchedule *schedule);

// Writes the instance's integer program as MPS. Fixed format fails with
// `InvalidArgument` once a name exceeds 8 characters.
//
// # Safety
// `instance` must be a live handle; `path` must be a nul-terminated string.
enum AfStatus af_export_mps(const struct AfInstance *instance, const char *path, bool free_format);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AIRFLEET_H */
