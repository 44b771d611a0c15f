#include "psane/sim.hpp"

#include "psane/report.hpp"
#include "psane/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace psane;
using namespace psane::sim;
using frontier::StrategyKind;

namespace {

ScenarioConfig flat_scenario(double base)
{
    ScenarioConfig c;
    c.environment.kind = terrain::FieldKind::Smooth;
    c.environment.params.base = base;
    c.environment.params.amplitude = 0.0;
    c.lipschitz = 0.2;
    c.margin = 0.5;
    c.start = {2.25, 4.75};
    c.time_budget = 300.0;
    return c;
}

ScenarioConfig short_preset(const std::string& name, StrategyKind k, double budget)
{
    auto c = scenario::preset(name);
    c.strategy = k;
    c.time_budget = budget;
    return c;
}

void check_invariants(const TrialResult& r)
{
    const auto& m = r.metrics;
    CHECK(m.samples == 3 + m.measurement_firings);
    CHECK(r.samples.size() == m.samples);
    CHECK(m.safe_set_shrinks == 0);
    CHECK(m.coverage_decreases == 0);
    for (std::size_t i = 1; i < m.coverage.size(); ++i) {
        CHECK(m.coverage[i].ratio >= m.coverage[i - 1].ratio);
        CHECK(m.coverage[i].t >= m.coverage[i - 1].t);
    }
    for (std::size_t i = 1; i < r.epochs.size(); ++i) CHECK(r.epochs[i].safe_cells >= r.epochs[i - 1].safe_cells);
    CHECK(m.success == (m.outcome == Outcome::GoalReached && m.safety_violations == 0));
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("goal inside the initial disk is reached at once")
{
    auto c = flat_scenario(0.1);
    c.goal = Vec2{3.25, 4.75};
    const auto r = run_trial(c);
    CHECK(r.metrics.outcome == Outcome::GoalReached);
    CHECK(r.metrics.success);
    CHECK(r.metrics.epochs == 1);
    CHECK(std::abs(r.metrics.path_length - 1.0) <= 2 * c.workspace.resolution);
    check_invariants(r);
}

TEST_CASE("greedy navigation through a wall gets stuck")
{
    auto c = flat_scenario(0.1);
    c.environment.kind = terrain::FieldKind::Heterogeneous;
    c.environment.params.amplitude = 1.0;
    c.environment.params.patches.push_back({{8.0, -1.0}, {8.0, 11.0}, 0.8, 0.1, 1.0});
    c.lipschitz.reset();
    c.goal = Vec2{13.75, 4.75};
    c.strategy = StrategyKind::NGH;
    const auto r = run_trial(c);
    CHECK(r.metrics.outcome == Outcome::Immobilized);
    CHECK_FALSE(r.metrics.success);
    CHECK(r.metrics.safety_violations > 0);
}

TEST_CASE("trials are deterministic")
{
    const auto c = short_preset("env2", StrategyKind::PSANE, 200.0);
    const auto a = run_trial(c);
    const auto b = run_trial(c);
    CHECK(report::events_csv(a) == report::events_csv(b));
    CHECK(report::trajectory_csv(a) == report::trajectory_csv(b));
    CHECK(report::summary_json(a) == report::summary_json(b));
    check_invariants(a);
}

TEST_CASE("safe strategies stay inside the certified set")
{
    for (auto k : {StrategyKind::SGH, StrategyKind::PGH, StrategyKind::PSANE}) {
        const auto r = run_trial(short_preset("env1", k, 300.0));
        CHECK(r.metrics.safety_violations == 0);
        CHECK(r.metrics.steps_outside_safe_set == 0);
        for (const auto& p : r.trajectory) CHECK(p.in_safe_set);
        check_invariants(r);
    }
}

TEST_CASE("exploration runs to its budget with monotone coverage")
{
    auto c = scenario::preset("env2_explore");
    REQUIRE(c.exploration());
    c.time_budget = 1000.0;
    const auto r = run_trial(c);
    CHECK((r.metrics.outcome == Outcome::TimeBudgetExhausted || r.metrics.outcome == Outcome::NoFrontier));
    CHECK(r.metrics.final_coverage > 0.0);
    check_invariants(r);
}

TEST_CASE("configuration errors name the key")
{
    auto c = flat_scenario(0.1);
    c.h = 1.5;
    try {
        run_trial(c);
        FAIL("expected a configuration error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "h");
    }
    auto d = flat_scenario(0.1);
    d.time_budget = 0.0;
    CHECK_THROWS_AS(run_trial(d), ConfigError);
    auto e = flat_scenario(0.9);
    CHECK_THROWS_AS(run_trial(e), ConfigError);
}

TEST_CASE("batch aggregation")
{
    auto c = flat_scenario(0.1);
    c.goal = Vec2{3.25, 4.75};
    BatchSpec one{{{"flat", c}}, {5}, {StrategyKind::PSANE}, 1};
    const auto r1 = run_batch(one);
    REQUIRE(r1.aggregate.size() == 1);
    const auto& row = r1.aggregate[0];
    CHECK(row.trials == 1);
    CHECK(row.length_mean == r1.trials[0].metrics.path_length);
    CHECK(row.length_std == 0.0);
    CHECK(row.time_std == 0.0);

    BatchSpec three{{{"flat", c}}, {1, 2, 3}, {StrategyKind::PSANE, StrategyKind::PGH}, 2};
    const auto r3 = run_batch(three);
    CHECK(r3.trials.size() == 6);
    for (const auto& a : r3.aggregate) CHECK(a.success_mean == 1.0);
    CHECK(aggregate_csv(r3.aggregate) == aggregate_csv(run_batch(three).aggregate));

    // Population std of hand values.
    std::vector<TrialSummary> ts(2);
    ts[0].environment = ts[1].environment = "x";
    ts[0].metrics.path_length = 2.0;
    ts[1].metrics.path_length = 4.0;
    ts[0].metrics.success = true;
    const auto agg = aggregate(ts);
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].length_mean == 3.0);
    CHECK(agg[0].length_std == 1.0);
    CHECK(agg[0].success_mean == 0.5);

    BatchSpec empty{{{"flat", c}}, {}, {StrategyKind::PSANE}, 1};
    CHECK_THROWS_AS(run_batch(empty), ConfigError);
}

TEST_CASE("per-trial seeds")
{
    const auto base = scenario::preset("env1");
    const auto a = trial_config(base, StrategyKind::PGH, 4);
    const auto b = trial_config(base, StrategyKind::PSANE, 4);
    CHECK(a.environment.seed == 4);
    CHECK(a.rng_seed == b.rng_seed);
    CHECK(a.rng_seed == mix_seed(4, 0x6d656173));
    CHECK(trial_config(base, StrategyKind::PGH, 5).rng_seed != a.rng_seed);
}

}
