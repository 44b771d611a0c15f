#pragma once

// On-disk artifacts of trials and batches, and composite map rendering.
//
// Run directory layout:
//   config.json       effective configuration (reproduces the run)
//   events.csv        one row per planning epoch
//   trajectory.csv    one row per control step
//   candidates.csv    scored frontier candidates per epoch
//   coverage.csv      (t, coverage) series
//   truth.pgm         ground-truth slip field
//   snapshots/        per-epoch map layers plus index.csv
//   summary.json      outcome and metrics, written last

#include "psane/sim.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace psane::report {

std::string events_csv(const sim::TrialResult& result);
std::string trajectory_csv(const sim::TrialResult& result);
std::string candidates_csv(const sim::TrialResult& result);
std::string coverage_csv(const sim::TrialMetrics& metrics);
std::string summary_json(const sim::TrialResult& result);
std::string trials_csv(const std::vector<sim::TrialSummary>& trials);

/* True if `dir` holds a finished run (its summary file exists). */
bool is_completed_run(const std::filesystem::path& dir);

/* Writes every artifact of a trial. Throws IoError when `dir` already holds a
 * completed run and `force` is false, or on write failure. */
void write_run(const std::filesystem::path& dir, const sim::TrialResult& result, bool force);

/* Directory name for one batch trial, e.g. "env1_PSANE_seed3". */
std::string trial_dir_name(const sim::TrialSummary& trial);

/* Writes aggregate.csv, aggregate.txt and trials.csv. */
void write_batch_summary(const std::filesystem::path& dir, const sim::BatchResult& result);

struct RenderResult {
    std::vector<std::filesystem::path> images;
    std::vector<std::string> warnings;
};

/* Composites every indexed snapshot of a run directory into render/epoch_NNNN.ppm:
 * truth colormap, margin-blocked shading, safe-set contour, trajectory up to
 * the snapshot time, start and goal markers. A missing snapshot produces a
 * warning and is skipped. Throws IoError when the run itself is unreadable. */
RenderResult render_run(const std::filesystem::path& run_dir, int pixels_per_cell = 12);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace psane::report
