#include "psane/psane.h"

#include "psane/report.hpp"
#include "psane/scenario.hpp"
#include "psane/sim.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

struct psane_scenario {
    psane::sim::ScenarioConfig config;
};

struct psane_trial {
    psane::sim::TrialResult result;
};

struct psane_batch {
    psane::sim::BatchSpec spec;
    std::optional<psane::sim::BatchResult> result;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

psane_status fail(psane_status status, const std::string& message, const std::string& field = {})
{
    g_error = message;
    g_field = field;
    return status;
}

template <typename F>
psane_status guarded(F&& body)
{
    g_error.clear();
    g_field.clear();
    try {
        body();
        return PSANE_OK;
    } catch (const psane::ConfigError& e) {
        return fail(PSANE_ERR_CONFIG, e.what(), e.field());
    } catch (const psane::IoError& e) {
        return fail(PSANE_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PSANE_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PSANE_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PSANE_ERR_INTERNAL, "unknown error");
    }
}

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

#define PSANE_REQUIRE(cond, what)                                   \
    do {                                                            \
        if (!(cond)) return fail(PSANE_ERR_ARGUMENT, what);        \
    } while (0)

psane_outcome to_c(psane::sim::Outcome o)
{
    switch (o) {
    case psane::sim::Outcome::GoalReached: return PSANE_GOAL_REACHED;
    case psane::sim::Outcome::Immobilized: return PSANE_IMMOBILIZED;
    case psane::sim::Outcome::NoFrontier: return PSANE_NO_FRONTIER;
    case psane::sim::Outcome::TimeBudgetExhausted: return PSANE_TIME_BUDGET_EXHAUSTED;
    }
    return PSANE_TIME_BUDGET_EXHAUSTED;
}

}  // namespace

extern "C" {

const char* psane_version(void)
{
    return "1.0.0";
}

const char* psane_last_error(void)
{
    return g_error.c_str();
}

const char* psane_last_error_field(void)
{
    return g_field.c_str();
}

void psane_string_free(char* s)
{
    std::free(s);
}

psane_status psane_scenario_load(const char* path, psane_scenario** out)
{
    PSANE_REQUIRE(path && out, "path and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new psane_scenario{psane::scenario::load(path)}; });
}

psane_status psane_scenario_from_json(const char* json, psane_scenario** out)
{
    PSANE_REQUIRE(json && out, "json and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new psane_scenario{psane::scenario::from_json(json)}; });
}

psane_status psane_scenario_preset(const char* name, psane_scenario** out)
{
    PSANE_REQUIRE(name && out, "name and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new psane_scenario{psane::scenario::preset(name)}; });
}

psane_status psane_scenario_override(psane_scenario* scenario, const char* assignment)
{
    PSANE_REQUIRE(scenario && assignment, "scenario and assignment must not be NULL");
    return guarded([&] {
        auto copy = scenario->config;
        psane::scenario::apply_override(copy, assignment);
        scenario->config = std::move(copy);
    });
}

psane_status psane_scenario_to_json(const psane_scenario* scenario, char** out)
{
    PSANE_REQUIRE(scenario && out, "scenario and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = dup(psane::scenario::to_json(scenario->config)); });
}

void psane_scenario_free(psane_scenario* scenario)
{
    delete scenario;
}

psane_status psane_trial_run(const psane_scenario* scenario, psane_trial** out)
{
    PSANE_REQUIRE(scenario && out, "scenario and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new psane_trial{psane::sim::run_trial(scenario->config)}; });
}

psane_status psane_trial_metrics_get(const psane_trial* trial, psane_trial_metrics* out)
{
    PSANE_REQUIRE(trial && out, "trial and out must not be NULL");
    const auto& m = trial->result.metrics;
    *out = psane_trial_metrics{};
    out->outcome = to_c(m.outcome);
    out->success = m.success ? 1 : 0;
    out->completion_time = m.completion_time;
    out->path_length = m.path_length;
    out->safety_violations = m.safety_violations;
    out->final_coverage = m.final_coverage;
    out->epochs = m.epochs;
    out->samples = m.samples;
    out->measurement_firings = m.measurement_firings;
    out->empty_intersections = m.empty_intersections;
    out->safe_set_shrinks = m.safe_set_shrinks;
    out->interval_widenings = m.interval_widenings;
    out->coverage_decreases = m.coverage_decreases;
    out->steps_outside_safe_set = m.steps_outside_safe_set;
    out->certified_cells = m.certified_cells;
    out->unsound_certified_cells = m.unsound_certified_cells;
    out->lipschitz = m.lipschitz;
    g_error.clear();
    return PSANE_OK;
}

psane_status psane_trial_summary_json(const psane_trial* trial, char** out)
{
    PSANE_REQUIRE(trial && out, "trial and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = dup(psane::report::summary_json(trial->result)); });
}

psane_status psane_trial_events_csv(const psane_trial* trial, char** out)
{
    PSANE_REQUIRE(trial && out, "trial and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = dup(psane::report::events_csv(trial->result)); });
}

psane_status psane_trial_config_json(const psane_trial* trial, char** out)
{
    PSANE_REQUIRE(trial && out, "trial and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = dup(psane::scenario::to_json(trial->result.config)); });
}

psane_status psane_trial_write(const psane_trial* trial, const char* dir, int force)
{
    PSANE_REQUIRE(trial && dir, "trial and dir must not be NULL");
    return guarded([&] { psane::report::write_run(dir, trial->result, force != 0); });
}

void psane_trial_free(psane_trial* trial)
{
    delete trial;
}

psane_status psane_batch_load(const char* manifest_path, psane_batch** out)
{
    PSANE_REQUIRE(manifest_path && out, "manifest_path and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new psane_batch{psane::scenario::load_manifest(manifest_path).batch, {}}; });
}

psane_status psane_batch_from_json(const char* manifest_json, const char* base_dir, psane_batch** out)
{
    PSANE_REQUIRE(manifest_json && out, "manifest_json and out must not be NULL");
    *out = nullptr;
    return guarded([&] {
        *out = new psane_batch{psane::scenario::parse_manifest(manifest_json, base_dir ? base_dir : ".").batch, {}};
    });
}

psane_status psane_batch_set_workers(psane_batch* batch, int workers)
{
    PSANE_REQUIRE(batch, "batch must not be NULL");
    if (workers < 1) return fail(PSANE_ERR_CONFIG, "workers: must be >= 1", "workers");
    batch->spec.workers = workers;
    g_error.clear();
    return PSANE_OK;
}

psane_status psane_batch_run(psane_batch* batch, const char* out_dir, int force)
{
    PSANE_REQUIRE(batch, "batch must not be NULL");
    return guarded([&] {
        namespace fs = std::filesystem;
        psane::sim::TrialSink sink;
        std::vector<psane::sim::TrialSummary> names;
        fs::path root;
        if (out_dir) {
            root = out_dir;
            if (fs::exists(root / "aggregate.csv") && !force)
                throw psane::IoError(root.string() + " already holds a completed batch (use --force to overwrite)");
            for (const auto& env : batch->spec.environments)
                for (auto s : batch->spec.strategies)
                    for (auto seed : batch->spec.seeds) names.push_back({env.environment, s, seed, {}, {}});
            sink = [&root, &names](std::size_t i, const psane::sim::TrialResult& r) {
                psane::report::write_run(root / "trials" / psane::report::trial_dir_name(names[i]), r, true);
            };
        }
        auto result = psane::sim::run_batch(batch->spec, sink);
        if (out_dir) psane::report::write_batch_summary(root, result);
        batch->result = std::move(result);
    });
}

psane_status psane_batch_trial_count(const psane_batch* batch, size_t* out)
{
    PSANE_REQUIRE(batch && out, "batch and out must not be NULL");
    PSANE_REQUIRE(batch->result, "batch has not been run");
    *out = batch->result->trials.size();
    return PSANE_OK;
}

psane_status psane_batch_failed_count(const psane_batch* batch, size_t* out)
{
    PSANE_REQUIRE(batch && out, "batch and out must not be NULL");
    PSANE_REQUIRE(batch->result, "batch has not been run");
    size_t n = 0;
    for (const auto& t : batch->result->trials) n += t.error.empty() ? 0 : 1;
    *out = n;
    return PSANE_OK;
}

psane_status psane_batch_aggregate_csv(const psane_batch* batch, char** out)
{
    PSANE_REQUIRE(batch && out, "batch and out must not be NULL");
    PSANE_REQUIRE(batch->result, "batch has not been run");
    *out = nullptr;
    return guarded([&] { *out = dup(psane::sim::aggregate_csv(batch->result->aggregate)); });
}

psane_status psane_batch_table(const psane_batch* batch, char** out)
{
    PSANE_REQUIRE(batch && out, "batch and out must not be NULL");
    PSANE_REQUIRE(batch->result, "batch has not been run");
    *out = nullptr;
    return guarded([&] { *out = dup(psane::sim::aggregate_table(batch->result->aggregate)); });
}

void psane_batch_free(psane_batch* batch)
{
    delete batch;
}

psane_status psane_render(const char* run_dir, int pixels_per_cell, size_t* images_written, char** warnings)
{
    PSANE_REQUIRE(run_dir, "run_dir must not be NULL");
    if (warnings) *warnings = nullptr;
    return guarded([&] {
        const auto r = psane::report::render_run(run_dir, pixels_per_cell > 0 ? pixels_per_cell : 12);
        if (images_written) *images_written = r.images.size();
        if (warnings) {
            std::string joined;
            for (const auto& w : r.warnings) joined += w + "\n";
            *warnings = dup(joined);
        }
    });
}

}  // extern "C"
