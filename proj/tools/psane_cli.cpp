// psane: run trials, batches and renders from scenario files.
//
//   psane run <scenario.json | preset:NAME> -o <dir> [--override k=v]... [--force]
//   psane batch <manifest.json> -o <dir> [-j N] [--force]
//   psane render <run-dir> [--scale PX]
//   psane preset <name>
//
// Exit status: 0 on any recorded trial outcome, 2 for configuration errors,
// 3 for I/O errors, 1 for anything else.

#include "psane/psane.h"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

int report(psane_status status)
{
    if (status == PSANE_OK) return 0;
    std::cerr << "psane: error: " << psane_last_error() << '\n';
    switch (status) {
    case PSANE_ERR_CONFIG: return 2;
    case PSANE_ERR_IO: return 3;
    case PSANE_ERR_ARGUMENT: return 2;
    default: return 1;
    }
}

std::string take(char* s)
{
    std::string out = s ? s : "";
    psane_string_free(s);
    return out;
}

const char* outcome_name(psane_outcome o)
{
    switch (o) {
    case PSANE_GOAL_REACHED: return "GoalReached";
    case PSANE_IMMOBILIZED: return "Immobilized";
    case PSANE_NO_FRONTIER: return "NoFrontier";
    case PSANE_TIME_BUDGET_EXHAUSTED: return "TimeBudgetExhausted";
    }
    return "?";
}

int cmd_run(const std::string& source, const std::string& out_dir, const std::vector<std::string>& overrides,
            int snapshot_interval, bool force)
{
    psane_scenario* scenario = nullptr;
    psane_status st = source.rfind("preset:", 0) == 0 ? psane_scenario_preset(source.substr(7).c_str(), &scenario)
                                                      : psane_scenario_load(source.c_str(), &scenario);
    if (st != PSANE_OK) return report(st);

    for (const auto& o : overrides) {
        st = psane_scenario_override(scenario, o.c_str());
        if (st != PSANE_OK) break;
    }
    if (st == PSANE_OK && snapshot_interval >= 0) {
        const std::string o = "snapshot_interval=" + std::to_string(snapshot_interval);
        st = psane_scenario_override(scenario, o.c_str());
    }
    psane_trial* trial = nullptr;
    if (st == PSANE_OK) st = psane_trial_run(scenario, &trial);
    psane_scenario_free(scenario);
    if (st != PSANE_OK) return report(st);

    st = psane_trial_write(trial, out_dir.c_str(), force ? 1 : 0);
    if (st == PSANE_OK) {
        psane_trial_metrics m;
        psane_trial_metrics_get(trial, &m);
        std::printf("outcome=%s success=%d time=%.2fs length=%.2fm violations=%d coverage=%.3f epochs=%d\n",
                    outcome_name(m.outcome), m.success, m.completion_time, m.path_length, m.safety_violations,
                    m.final_coverage, m.epochs);
    }
    psane_trial_free(trial);
    return report(st);
}

int cmd_batch(const std::string& manifest, const std::string& out_dir, int workers, bool force)
{
    psane_batch* batch = nullptr;
    psane_status st = psane_batch_load(manifest.c_str(), &batch);
    if (st != PSANE_OK) return report(st);
    if (workers > 0) st = psane_batch_set_workers(batch, workers);
    if (st == PSANE_OK) st = psane_batch_run(batch, out_dir.c_str(), force ? 1 : 0);
    if (st == PSANE_OK) {
        char* table = nullptr;
        st = psane_batch_table(batch, &table);
        if (st == PSANE_OK) std::cout << take(table);
        size_t failed = 0;
        psane_batch_failed_count(batch, &failed);
        if (failed > 0) std::cerr << "psane: " << failed << " trial(s) failed to run; see trials.csv\n";
    }
    psane_batch_free(batch);
    return report(st);
}

int cmd_render(const std::string& run_dir, int scale)
{
    size_t images = 0;
    char* warnings = nullptr;
    const psane_status st = psane_render(run_dir.c_str(), scale, &images, &warnings);
    const std::string w = take(warnings);
    if (!w.empty()) std::cerr << w;
    if (st == PSANE_OK) std::printf("rendered %zu image(s) into %s/render\n", images, run_dir.c_str());
    return report(st);
}

int cmd_preset(const std::string& name)
{
    psane_scenario* scenario = nullptr;
    psane_status st = psane_scenario_preset(name.c_str(), &scenario);
    if (st != PSANE_OK) return report(st);
    char* json = nullptr;
    st = psane_scenario_to_json(scenario, &json);
    if (st == PSANE_OK) std::cout << take(json);
    psane_scenario_free(scenario);
    return report(st);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Safe terrain-aware exploration and navigation simulator"};
    app.require_subcommand(1);

    std::string source, out_dir, manifest, run_dir, preset_name;
    std::vector<std::string> overrides;
    bool force = false;
    int workers = 0;
    int snapshot_interval = -1;
    int scale = 12;

    auto* run = app.add_subcommand("run", "Run one trial");
    run->add_option("scenario", source, "Scenario JSON file, or preset:NAME")->required();
    run->add_option("-o,--output", out_dir, "Output directory")->required();
    run->add_option("--override", overrides, "Dotted key=value assignment (repeatable)");
    run->add_option("--snapshot-interval", snapshot_interval, "Snapshot every N epochs (0: final only)");
    run->add_flag("--force", force, "Overwrite a completed run");

    auto* batch = app.add_subcommand("batch", "Run a seed x strategy batch");
    batch->add_option("manifest", manifest, "Batch manifest JSON")->required();
    batch->add_option("-o,--output", out_dir, "Output directory")->required();
    batch->add_option("-j,--workers", workers, "Worker threads");
    batch->add_flag("--force", force, "Overwrite a completed batch");

    auto* render = app.add_subcommand("render", "Render snapshot composites of a run");
    render->add_option("run_dir", run_dir, "Run directory")->required();
    render->add_option("--scale", scale, "Pixels per cell")->check(CLI::PositiveNumber);

    auto* preset = app.add_subcommand("preset", "Print a built-in scenario as JSON");
    preset->add_option("name", preset_name, "env1, env2, env2_explore or gp_prior")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*run) return cmd_run(source, out_dir, overrides, snapshot_interval, force);
    if (*batch) return cmd_batch(manifest, out_dir, workers, force);
    if (*render) return cmd_render(run_dir, scale);
    if (*preset) return cmd_preset(preset_name);
    return 2;
}
