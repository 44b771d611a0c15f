#pragma once

// The outer planning loop: refit the slip model, certify, pick a frontier,
// drive to it while sampling, repeat until a termination rule fires.

#include "psane/core.hpp"
#include "psane/frontier.hpp"
#include "psane/gp.hpp"
#include "psane/nav.hpp"
#include "psane/safecert.hpp"
#include "psane/terrain.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace psane::sim {

struct EnvironmentConfig {
    terrain::FieldKind kind = terrain::FieldKind::Smooth;
    terrain::FieldParams params;
    std::uint64_t seed = 0;
};

struct ScenarioConfig {
    std::string name = "scenario";
    WorkspaceSpec workspace;
    EnvironmentConfig environment;
    Vec2 start{2.0, 5.0};
    /* Empty in pure exploration mode. */
    std::optional<Vec2> goal;

    double h = 0.8;
    double beta = 4.0;
    /* Lipschitz constant; when absent, lipschitz_scale * field bound. */
    std::optional<double> lipschitz;
    double lipschitz_scale = 1.1;
    double k_e = 0.1;
    double k_g = 0.1;

    gp::KernelParams gp;
    double prior_mean = 0.5;

    frontier::StrategyKind strategy = frontier::StrategyKind::PSANE;
    std::vector<frontier::Objective> pgh_schedule{frontier::Objective::Goal, frontier::Objective::Goal,
                                                  frontier::Objective::Expansion};

    double robot_radius = 0.3;
    /* Erosion margin; when absent, robot_radius + resolution. */
    std::optional<double> margin;
    double r0 = 1.5;
    nav::RobotParams robot;
    double goal_tolerance = 0.5;
    double epoch_max_travel = 2.0;
    /* Time spent probing in place when an epoch produces no motion; the
     * probe lands within half a sample spacing of the robot. */
    double dwell_time = 2.0;
    /* PGH and PSANE skip frontier cells whose selection produced no motion
     * until the safe set grows again. SGH ignores it. */
    bool exclude_stalled = true;
    double time_budget = 600.0;
    std::uint64_t rng_seed = 1;

    /* Keep per-epoch candidate tables and map snapshots every N epochs
     * (0: final epoch only). */
    bool log_candidates = true;
    int snapshot_interval = 10;

    bool exploration() const { return !goal.has_value(); }
    double effective_margin() const { return margin.value_or(robot_radius + workspace.resolution); }

    /* Checks everything that does not need the generated field. Throws
     * ConfigError naming the offending key. */
    void validate() const;
};

enum class Outcome { GoalReached, Immobilized, NoFrontier, TimeBudgetExhausted };
std::string to_string(Outcome outcome);

struct EpochRecord {
    int epoch = 0;
    double t = 0.0;
    Vec2 robot;
    double heading = 0.0;
    std::optional<Vec2> subgoal;
    std::size_t safe_cells = 0;
    std::size_t frontier_cells = 0;   // |G_t|
    std::size_t navigable = 0;        // candidates with a reachable snapped target
    std::size_t pareto_size = 0;
    std::string objective;            // PGH phase, or "goal"/"overall"/"direct"
    int g = 0;
    double p_e = 0.0;
    double v_goal = 0.0;
    double v_overall = 0.0;
    double coverage = 0.0;
    std::int64_t empty_intersections = 0;
    std::size_t dataset_size = 0;
    std::string event;
};

struct CandidateRecord {
    int epoch = 0;
    CellIndex cell;
    Vec2 location;
    int g = 0;
    double p_e = 0.0;
    double v_goal = 0.0;
    double v_overall = 0.0;
    bool pareto = false;
    bool chosen = false;
};

struct Snapshot {
    int epoch = 0;
    double t = 0.0;
    ScalarGrid mean;
    ScalarGrid stddev;
    ScalarGrid lower;
    ScalarGrid upper;
    Mask safe;
    Mask blocked;
};

struct CoveragePoint {
    double t = 0.0;
    double ratio = 0.0;
};

struct TrialMetrics {
    Outcome outcome = Outcome::TimeBudgetExhausted;
    bool success = false;
    double completion_time = 0.0;
    double path_length = 0.0;
    int safety_violations = 0;
    std::vector<CoveragePoint> coverage;
    double final_coverage = 0.0;

    int epochs = 0;
    std::size_t samples = 0;             // bootstrap + in-leg + dwell
    std::size_t measurement_firings = 0; // in-leg + dwell hook calls
    std::int64_t empty_intersections = 0;
    /* Invariant checks, expected zero. */
    int safe_set_shrinks = 0;
    int interval_widenings = 0;
    int coverage_decreases = 0;
    int steps_outside_safe_set = 0;
    /* Certified cells whose true slip exceeds h (final and ever). */
    std::size_t certified_cells = 0;
    std::size_t unsound_certified_cells = 0;
    bool coverage_exceeds_one = false;
    double lipschitz = 0.0;
};

struct TrialResult {
    ScenarioConfig config;  // effective, with derived values filled in
    terrain::SlipField truth;
    TrialMetrics metrics;
    std::vector<EpochRecord> epochs;
    std::vector<CandidateRecord> candidates;
    std::vector<nav::TrajectoryPoint> trajectory;
    std::vector<terrain::NoisySample> samples;
    std::vector<Snapshot> snapshots;
};

/* Runs one trial. Configuration problems throw ConfigError before the loop
 * starts; everything afterwards ends as a recorded outcome. */
TrialResult run_trial(const ScenarioConfig& config);

struct BatchEntry {
    std::string environment;
    ScenarioConfig config;
};

struct TrialSummary {
    std::string environment;
    frontier::StrategyKind strategy = frontier::StrategyKind::PSANE;
    std::uint64_t seed = 0;
    TrialMetrics metrics;
    /* Set when the trial could not run (for example a start cell that the
     * seeded field makes unsafe); such trials are left out of aggregates. */
    std::string error;
};

struct AggregateRow {
    std::string environment;
    frontier::StrategyKind strategy = frontier::StrategyKind::PSANE;
    std::size_t trials = 0;
    std::size_t failed_trials = 0;
    double success_mean = 0.0, success_std = 0.0;
    double time_mean = 0.0, time_std = 0.0;
    double length_mean = 0.0, length_std = 0.0;
    double coverage_mean = 0.0, coverage_std = 0.0;
    int safety_violations = 0;
};

/* Per-trial configuration for one (environment, strategy, seed) cell of a
 * batch: the field seed is `seed`, the measurement stream is derived from it. */
ScenarioConfig trial_config(const ScenarioConfig& base, frontier::StrategyKind strategy, std::uint64_t seed);

struct BatchSpec {
    std::vector<BatchEntry> environments;
    std::vector<std::uint64_t> seeds;
    std::vector<frontier::StrategyKind> strategies;
    int workers = 1;
};

struct BatchResult {
    std::vector<TrialSummary> trials;  // environment-major, then strategy, then seed
    std::vector<AggregateRow> aggregate;
};

/* Mean and sample-free (population) std per (environment, strategy). */
std::vector<AggregateRow> aggregate(const std::vector<TrialSummary>& trials);

/* Called once per finished trial with its index in BatchResult::trials;
 * may run on worker threads concurrently. Exceptions are recorded as that
 * trial's error. */
using TrialSink = std::function<void(std::size_t, const TrialResult&)>;

BatchResult run_batch(const BatchSpec& spec, const TrialSink& sink = {});

std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string aggregate_table(const std::vector<AggregateRow>& rows);

}  // namespace psane::sim
