#ifndef PSANE_PSANE_H
#define PSANE_PSANE_H

/* C interface to the psane simulator: scenarios, single trials, batches and
 * rendering. All handles are opaque. Functions returning psane_status leave
 * a message for psane_last_error() on failure (per calling thread). Strings
 * returned through char** are owned by the caller and released with
 * psane_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(PSANE_BUILDING)
#define PSANE_API __declspec(dllexport)
#else
#define PSANE_API __declspec(dllimport)
#endif
#else
#define PSANE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psane_status {
    PSANE_OK = 0,
    PSANE_ERR_INTERNAL = 1,
    PSANE_ERR_CONFIG = 2,
    PSANE_ERR_IO = 3,
    PSANE_ERR_ARGUMENT = 4
} psane_status;

typedef enum psane_outcome {
    PSANE_GOAL_REACHED = 0,
    PSANE_IMMOBILIZED = 1,
    PSANE_NO_FRONTIER = 2,
    PSANE_TIME_BUDGET_EXHAUSTED = 3
} psane_outcome;

typedef struct psane_scenario psane_scenario;
typedef struct psane_trial psane_trial;
typedef struct psane_batch psane_batch;

typedef struct psane_trial_metrics {
    psane_outcome outcome;
    int success;
    double completion_time;
    double path_length;
    int safety_violations;
    double final_coverage;
    int epochs;
    uint64_t samples;
    uint64_t measurement_firings;
    int64_t empty_intersections;
    int safe_set_shrinks;
    int interval_widenings;
    int coverage_decreases;
    int steps_outside_safe_set;
    uint64_t certified_cells;
    uint64_t unsound_certified_cells;
    double lipschitz;
} psane_trial_metrics;

PSANE_API const char* psane_version(void);
/* Message of the last failed call on this thread; "" if none. */
PSANE_API const char* psane_last_error(void);
/* Offending configuration key of the last PSANE_ERR_CONFIG; "" otherwise. */
PSANE_API const char* psane_last_error_field(void);
PSANE_API void psane_string_free(char* s);

PSANE_API psane_status psane_scenario_load(const char* path, psane_scenario** out);
PSANE_API psane_status psane_scenario_from_json(const char* json, psane_scenario** out);
PSANE_API psane_status psane_scenario_preset(const char* name, psane_scenario** out);
/* Applies one dotted key=value assignment, e.g. "strategy=PGH". */
PSANE_API psane_status psane_scenario_override(psane_scenario* scenario, const char* assignment);
PSANE_API psane_status psane_scenario_to_json(const psane_scenario* scenario, char** out);
PSANE_API void psane_scenario_free(psane_scenario* scenario);

PSANE_API psane_status psane_trial_run(const psane_scenario* scenario, psane_trial** out);
PSANE_API psane_status psane_trial_metrics_get(const psane_trial* trial, psane_trial_metrics* out);
PSANE_API psane_status psane_trial_summary_json(const psane_trial* trial, char** out);
PSANE_API psane_status psane_trial_events_csv(const psane_trial* trial, char** out);
/* Effective configuration with derived values (L, margin) filled in. */
PSANE_API psane_status psane_trial_config_json(const psane_trial* trial, char** out);
/* Writes the full run directory; refuses to replace a completed run unless
 * force is nonzero. */
PSANE_API psane_status psane_trial_write(const psane_trial* trial, const char* dir, int force);
PSANE_API void psane_trial_free(psane_trial* trial);

PSANE_API psane_status psane_batch_load(const char* manifest_path, psane_batch** out);
PSANE_API psane_status psane_batch_from_json(const char* manifest_json, const char* base_dir, psane_batch** out);
PSANE_API psane_status psane_batch_set_workers(psane_batch* batch, int workers);
/* Runs every trial. With a non-NULL out_dir, each trial is written to
 * out_dir/trials/<env>_<strategy>_seed<k> and the aggregate files to
 * out_dir. */
PSANE_API psane_status psane_batch_run(psane_batch* batch, const char* out_dir, int force);
PSANE_API psane_status psane_batch_trial_count(const psane_batch* batch, size_t* out);
PSANE_API psane_status psane_batch_failed_count(const psane_batch* batch, size_t* out);
PSANE_API psane_status psane_batch_aggregate_csv(const psane_batch* batch, char** out);
PSANE_API psane_status psane_batch_table(const psane_batch* batch, char** out);
PSANE_API void psane_batch_free(psane_batch* batch);

/* Renders composites for a run directory. `warnings` (optional) receives
 * newline-separated per-frame warnings. */
PSANE_API psane_status psane_render(const char* run_dir, int pixels_per_cell, size_t* images_written,
                                    char** warnings);

#ifdef __cplusplus
}
#endif

#endif
