#include "psane/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace psane::sim {

namespace {

constexpr double kIntervalSlack = 1e-12;

void require(bool ok, const char* field, const char* what)
{
    if (!ok) throw ConfigError(what, field);
}

/* Cells whose interval is not contained in the previous one. */
int count_widenings(const safecert::ConfidenceState& before, const safecert::ConfidenceState& after)
{
    int n = 0;
    for (std::size_t i = 0; i < after.lower.size(); ++i)
        if (after.lower[i] < before.lower[i] - kIntervalSlack || after.upper[i] > before.upper[i] + kIntervalSlack) ++n;
    return n;
}

bool is_subset(const Mask& a, const Mask& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && !b[i]) return false;
    return true;
}

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

class Trial {
public:
    explicit Trial(const ScenarioConfig& config) : cfg_(config) {}

    TrialResult run();

private:
    void preflight();
    void measure(Vec2 p);
    void finish(Outcome outcome, const std::string& event);
    void snapshot(int epoch, const gp::GridPrediction& pred, const nav::ObstacleMap* obs);
    void append_leg(nav::LegResult& leg);

    ScenarioConfig cfg_;
    TrialResult out_;
    std::mt19937_64 rng_;
    Mask truth_safe_;
    safecert::ConfidenceState conf_;
    safecert::SafeSet safe_;
    nav::RobotState robot_;
    frontier::SelectionStrategy strategy_;
    double last_coverage_ = 0.0;
    /* Frontier cells whose selection produced no motion; cleared whenever
     * the safe set grows. */
    Mask stalled_;
    std::size_t stalled_safe_size_ = 0;
};

void Trial::preflight()
{
    cfg_.validate();
    const WorkspaceSpec& spec = cfg_.workspace;
    out_.truth = terrain::generate_field(spec, cfg_.environment.kind, cfg_.environment.params, cfg_.environment.seed);
    if (!cfg_.lipschitz) cfg_.lipschitz = std::max(cfg_.lipschitz_scale * out_.truth.lipschitz_bound, 1e-6);
    if (!cfg_.margin) cfg_.margin = cfg_.effective_margin();
    require(*cfg_.lipschitz > 0.0, "lipschitz", "must be positive");

    if (out_.truth.value_at(cfg_.start) > cfg_.h)
        throw ConfigError("true slip at the start exceeds h", "start");
    truth_safe_ = terrain::true_safe_mask(out_.truth, cfg_.h);
    if (count_set(truth_safe_) == 0) throw ConfigError("no cell of the field is below h", "h");

    auto init = safecert::init_safe_set(spec, cfg_.start, cfg_.r0, cfg_.h, *cfg_.lipschitz);
    safe_ = std::move(init.safe);
    if (cfg_.strategy != frontier::StrategyKind::NGH) {
        nav::ObstacleMap obs;
        try {
            obs = nav::build_obstacle_map(safe_, *cfg_.margin, spec);
        } catch (const RobotBoxedIn&) {
            throw ConfigError("initial safe disk is smaller than the safety margin", "r0");
        }
        if (obs.blocked(spec.cell_of(cfg_.start)))
            throw ConfigError("start cell lies inside the safety margin of the initial safe disk", "r0");
    }

    rng_.seed(cfg_.rng_seed);
    for (Vec2 p : init.bootstrap) out_.samples.push_back(terrain::sample_truth(out_.truth, p, cfg_.gp.noise_std, rng_));

    conf_ = safecert::ConfidenceState::initial(spec, cfg_.beta);
    stalled_ = Mask(spec, 0);
    robot_.position = cfg_.start;
    robot_.commanded_speed = cfg_.robot.speed;
    robot_.path_log.push_back({0.0, cfg_.start});
    strategy_.kind = cfg_.strategy;
    strategy_.schedule = cfg_.pgh_schedule;
    last_coverage_ = safecert::coverage_ratio(safe_, truth_safe_);
    out_.metrics.coverage.push_back({0.0, last_coverage_});
    out_.metrics.lipschitz = *cfg_.lipschitz;
}

void Trial::measure(Vec2 p)
{
    out_.samples.push_back(terrain::sample_truth(out_.truth, p, cfg_.gp.noise_std, rng_));
    ++out_.metrics.measurement_firings;
}

void Trial::append_leg(nav::LegResult& leg)
{
    auto& m = out_.metrics;
    m.safety_violations += leg.safety_violations;
    if (cfg_.strategy != frontier::StrategyKind::NGH) m.steps_outside_safe_set += leg.steps_outside_safe_set;
    for (auto& p : leg.trajectory) out_.trajectory.push_back(std::move(p));
}

void Trial::snapshot(int epoch, const gp::GridPrediction& pred, const nav::ObstacleMap* obs)
{
    Snapshot s;
    s.epoch = epoch;
    s.t = robot_.time;
    s.mean = pred.mean;
    s.stddev = pred.stddev;
    s.lower = conf_.lower;
    s.upper = conf_.upper;
    s.safe = safe_.mask;
    s.blocked = obs ? obs->blocked : Mask(cfg_.workspace, 0);
    if (!out_.snapshots.empty() && out_.snapshots.back().epoch == epoch) out_.snapshots.back() = std::move(s);
    else out_.snapshots.push_back(std::move(s));
}

void Trial::finish(Outcome outcome, const std::string& event)
{
    auto& m = out_.metrics;
    m.outcome = outcome;
    m.success = outcome == Outcome::GoalReached && m.safety_violations == 0;
    m.completion_time = robot_.time;
    m.path_length = robot_.distance_traveled;
    m.final_coverage = last_coverage_;
    m.samples = out_.samples.size();
    m.empty_intersections = conf_.empty_intersections;
    m.certified_cells = safe_.size();
    m.unsound_certified_cells = 0;
    for (std::size_t i = 0; i < safe_.mask.size(); ++i)
        if (safe_.mask[i] && !truth_safe_[i]) ++m.unsound_certified_cells;
    if (!out_.epochs.empty()) out_.epochs.back().event = event;
}

TrialResult Trial::run()
{
    preflight();
    const WorkspaceSpec& spec = cfg_.workspace;
    const bool ngh = cfg_.strategy == frontier::StrategyKind::NGH;
    const frontier::ScoringParams scoring{cfg_.h, *cfg_.lipschitz, cfg_.k_e, cfg_.k_g};
    auto& m = out_.metrics;

    nav::LegContext ctx;
    ctx.truth = &out_.truth;
    ctx.h = cfg_.h;
    ctx.measure = [this](Vec2 p) { measure(p); };

    nav::LegLimits limits;
    limits.max_travel = cfg_.epoch_max_travel;
    limits.time_budget = cfg_.time_budget;
    limits.goal = cfg_.goal;
    limits.goal_tolerance = cfg_.goal_tolerance;

    gp::GridPosterior posterior(spec, cfg_.gp, cfg_.prior_mean);
    gp::GridPrediction pred;
    int epoch = 0;
    while (true) {
        if (cfg_.goal && distance(robot_.position, *cfg_.goal) <= cfg_.goal_tolerance) {
            finish(Outcome::GoalReached, "goal_reached");
            break;
        }
        if (robot_.time >= cfg_.time_budget - 1e-9) {
            finish(Outcome::TimeBudgetExhausted, "time_budget");
            break;
        }
        ++epoch;
        m.epochs = epoch;

        pred = posterior.update(out_.samples);
        auto next_conf = safecert::update_confidence(conf_, pred.mean, pred.stddev, cfg_.beta);
        m.interval_widenings += count_widenings(conf_, next_conf);
        conf_ = std::move(next_conf);
        auto next_safe = safecert::safe_expand(safe_, conf_.upper, spec);
        if (!is_subset(safe_.mask, next_safe.mask)) ++m.safe_set_shrinks;
        safe_ = std::move(next_safe);
        if (safe_.size() != stalled_safe_size_) {
            std::fill(stalled_.values().begin(), stalled_.values().end(), 0);
            stalled_safe_size_ = safe_.size();
        }
        const double coverage = safecert::coverage_ratio(safe_, truth_safe_);
        if (coverage < last_coverage_) ++m.coverage_decreases;
        if (coverage > 1.0) m.coverage_exceeds_one = true;
        last_coverage_ = coverage;
        m.coverage.push_back({robot_.time, coverage});

        EpochRecord rec;
        rec.epoch = epoch;
        rec.t = robot_.time;
        rec.robot = robot_.position;
        rec.heading = robot_.heading;
        rec.safe_cells = safe_.size();
        rec.coverage = coverage;
        rec.empty_intersections = conf_.empty_intersections;
        rec.dataset_size = out_.samples.size();

        std::vector<Vec2> waypoints;
        std::optional<CellIndex> chosen_cell;
        std::optional<nav::ObstacleMap> obs;
        std::string failure;
        if (ngh) {
            rec.subgoal = cfg_.goal;
            rec.objective = "direct";
            waypoints.push_back(*cfg_.goal);
        } else {
            try {
                obs = nav::build_obstacle_map(safe_, *cfg_.margin, spec);
                const Mask free = nav::reachable_free(*obs, spec, robot_.position);
                const CellIndex here = spec.cell_of(robot_.position);
                std::optional<Vec2> subgoal;

                if (cfg_.goal && free(spec.cell_of(*cfg_.goal))) {
                    subgoal = *cfg_.goal;
                    rec.objective = "goal_in_safe_set";
                } else {
                    const auto frontiers = frontier::extract_frontiers(safe_.mask);
                    const auto reach = frontier::reachable_frontiers(frontiers, safe_.mask, spec, robot_.position);
                    auto scored = frontier::score_candidates(spec, reach, conf_.lower, safe_.mask, scoring, cfg_.goal,
                                                             robot_.position);
                    rec.frontier_cells = scored.size();
                    std::vector<frontier::FrontierCandidate> navigable;
                    navigable.reserve(scored.size());
                    std::size_t stalled = 0;
                    for (const auto& c : scored) {
                        if (!nav::snap_target(*obs, spec, c.location, &free)) continue;
                        if (stalled_(c.cell)) ++stalled;
                        else navigable.push_back(c);
                    }
                    rec.navigable = navigable.size();
                    if (navigable.empty()) {
                        failure = frontiers.cells.empty() ? "exploration_complete"
                                  : stalled > 0           ? "frontiers_stalled"
                                                          : "no_navigable_frontier";
                    } else {
                        const auto sel = frontier::select_subgoal(strategy_, navigable, cfg_.goal, robot_.position);
                        subgoal = sel.location;
                        rec.pareto_size = sel.pareto.size();
                        if (sel.objective) rec.objective = frontier::to_string(*sel.objective);
                        else rec.objective = "overall";
                        const auto& chosen = navigable[*sel.candidate];
                        chosen_cell = chosen.cell;
                        rec.g = chosen.g;
                        rec.p_e = chosen.p_e;
                        rec.v_goal = chosen.v_goal;
                        rec.v_overall = chosen.v_overall;
                        if (cfg_.log_candidates) {
                            std::vector<std::uint8_t> on_front(navigable.size(), 0);
                            for (std::size_t i : sel.pareto) on_front[i] = 1;
                            for (std::size_t i = 0; i < navigable.size(); ++i) {
                                const auto& c = navigable[i];
                                out_.candidates.push_back({epoch, c.cell, c.location, c.g, c.p_e, c.v_goal,
                                                           c.v_overall, on_front[i] != 0, i == *sel.candidate});
                            }
                        }
                    }
                }
                if (subgoal) {
                    rec.subgoal = subgoal;
                    const auto path = nav::plan_path(*obs, spec, robot_.position, *subgoal);
                    const Vec2 center = spec.cell_center(here);
                    if (distance(center, robot_.position) > 1e-9 && path.cells.size() > 1)
                        waypoints.push_back(center);
                    waypoints.insert(waypoints.end(), path.waypoints.begin(), path.waypoints.end());
                }
            } catch (const RobotBoxedIn&) {
                failure = "boxed_in";
            } catch (const NoSafePath&) {
                failure = "no_safe_path";
            } catch (const SafetyBreach&) {
                failure = "safety_breach";
            }
        }

        const bool snap_due = cfg_.snapshot_interval > 0 && (epoch - 1) % cfg_.snapshot_interval == 0;
        if (!failure.empty()) {
            out_.epochs.push_back(rec);
            snapshot(epoch, pred, obs ? &*obs : nullptr);
            finish(Outcome::NoFrontier, failure);
            break;
        }
        if (snap_due) snapshot(epoch, pred, obs ? &*obs : nullptr);

        ctx.safe = &safe_.mask;
        auto leg = nav::navigate_to(robot_, waypoints, ctx, cfg_.robot, limits);
        const bool moved = leg.traveled > 0.0 || !leg.trajectory.empty();
        append_leg(leg);
        rec.event = nav::to_string(leg.outcome);

        if (!moved && leg.outcome == nav::LegOutcome::Arrived) {
            // No motion this epoch: probe the ground under the footprint.
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const double r = 0.5 * cfg_.robot.sample_spacing * std::sqrt(unit(rng_));
            const double a = 2.0 * std::numbers::pi * unit(rng_);
            const Vec2 probe = robot_.position + Vec2{r * std::cos(a), r * std::sin(a)};
            measure(spec.contains(probe) ? probe : robot_.position);
            robot_.time = std::min(cfg_.time_budget, robot_.time + cfg_.dwell_time);
            robot_.path_log.push_back({robot_.time, robot_.position});
            nav::TrajectoryPoint tp;
            tp.t = robot_.time;
            tp.position = robot_.position;
            tp.s_true = out_.truth.value_at(robot_.position);
            tp.in_safe_set = safe_.mask(spec.cell_of(robot_.position)) != 0;
            tp.event = "dwell";
            out_.trajectory.push_back(tp);
            rec.event = "dwell";
            if (chosen_cell && cfg_.exclude_stalled && strategy_.kind != frontier::StrategyKind::SGH)
                stalled_(*chosen_cell) = 1;
        }
        // A schedule slot lasts until its subgoal is reached.
        if (chosen_cell && strategy_.kind == frontier::StrategyKind::PGH && leg.outcome == nav::LegOutcome::TravelCap &&
            strategy_.phase > 0)
            --strategy_.phase;
        if (!ngh && !safe_.mask(spec.cell_of(robot_.position))) ++m.steps_outside_safe_set;
        out_.epochs.push_back(rec);

        if (leg.outcome == nav::LegOutcome::Immobilized) {
            finish(Outcome::Immobilized, "immobilized");
            break;
        }
        if (leg.outcome == nav::LegOutcome::GoalReached) {
            finish(Outcome::GoalReached, "goal_reached");
            break;
        }
        if (leg.outcome == nav::LegOutcome::TimeBudget) {
            finish(Outcome::TimeBudgetExhausted, "time_budget");
            break;
        }
    }
    if (out_.snapshots.empty() || out_.snapshots.back().epoch != epoch) {
        std::optional<nav::ObstacleMap> obs;
        if (!ngh) {
            try {
                obs = nav::build_obstacle_map(safe_, *cfg_.margin, spec);
            } catch (const RobotBoxedIn&) {
            }
        }
        snapshot(epoch, pred, obs ? &*obs : nullptr);
    }
    out_.config = cfg_;
    return std::move(out_);
}

}  // namespace

void ScenarioConfig::validate() const
{
    workspace.validate();
    require(std::isfinite(h) && h > 0.0 && h < 1.0, "h", "must lie in (0, 1)");
    require(std::isfinite(beta) && beta > 0.0, "beta", "must be positive");
    if (lipschitz) require(std::isfinite(*lipschitz) && *lipschitz > 0.0, "lipschitz", "must be positive");
    require(std::isfinite(lipschitz_scale) && lipschitz_scale > 0.0, "lipschitz_scale", "must be positive");
    require(std::isfinite(k_e) && k_e > 0.0, "k_e", "must be positive");
    require(std::isfinite(k_g) && k_g > 0.0, "k_g", "must be positive");
    gp.validate();
    require(std::isfinite(prior_mean), "gp.prior_mean", "must be finite");
    require(!pgh_schedule.empty(), "pgh_schedule", "must not be empty");
    require(std::isfinite(robot_radius) && robot_radius >= 0.0, "robot.radius", "must be >= 0");
    if (margin) require(std::isfinite(*margin) && *margin >= 0.0, "margin", "must be >= 0");
    require(std::isfinite(r0) && r0 > 0.0, "r0", "must be positive");
    require(robot.speed > 0.0, "robot.speed", "must be positive");
    require(robot.turn_rate > 0.0, "robot.turn_rate", "must be positive");
    require(robot.dt > 0.0, "robot.dt", "must be positive");
    require(robot.s_stuck > 0.0 && robot.s_stuck <= 1.0, "robot.s_stuck", "must lie in (0, 1]");
    require(robot.t_stuck > 0.0, "robot.t_stuck", "must be positive");
    require(robot.arrival_tolerance >= 0.0, "robot.arrival_tolerance", "must be >= 0");
    require(robot.sample_spacing > 0.0, "robot.sample_spacing", "must be positive");
    require(goal_tolerance >= 0.0, "goal_tolerance", "must be >= 0");
    require(epoch_max_travel > 0.0, "epoch_max_travel", "must be positive");
    require(dwell_time > 0.0, "dwell_time", "must be positive");
    require(std::isfinite(time_budget) && time_budget > 0.0, "time_budget", "must be positive");
    require(snapshot_interval >= 0, "snapshot_interval", "must be >= 0");
    require(workspace.contains(start), "start", "must lie inside the workspace");
    if (goal) require(workspace.contains(*goal), "goal", "must lie inside the workspace");
    if (strategy == frontier::StrategyKind::NGH) require(goal.has_value(), "strategy", "NGH needs a goal");
}

std::string to_string(Outcome outcome)
{
    switch (outcome) {
    case Outcome::GoalReached: return "GoalReached";
    case Outcome::Immobilized: return "Immobilized";
    case Outcome::NoFrontier: return "NoFrontier";
    case Outcome::TimeBudgetExhausted: return "TimeBudgetExhausted";
    }
    return "TimeBudgetExhausted";
}

TrialResult run_trial(const ScenarioConfig& config)
{
    return Trial(config).run();
}

ScenarioConfig trial_config(const ScenarioConfig& base, frontier::StrategyKind strategy, std::uint64_t seed)
{
    ScenarioConfig c = base;
    c.strategy = strategy;
    c.environment.seed = seed;
    c.rng_seed = mix_seed(seed, 0x6d656173ULL);
    return c;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialSummary>& trials)
{
    std::vector<AggregateRow> rows;
    std::map<std::pair<std::string, int>, std::vector<const TrialSummary*>> groups;
    std::vector<std::pair<std::string, int>> order;
    for (const auto& t : trials) {
        const auto key = std::make_pair(t.environment, static_cast<int>(t.strategy));
        auto [it, fresh] = groups.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.push_back(&t);
    }
    auto stats = [](const std::vector<double>& v) {
        if (v.empty()) return std::make_pair(0.0, 0.0);
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        return std::make_pair(mean, std::sqrt(var));
    };
    for (const auto& key : order) {
        const auto& group = groups[key];
        AggregateRow row;
        row.environment = key.first;
        row.strategy = group.front()->strategy;
        std::vector<double> success, time, length, coverage;
        for (const auto* t : group) {
            if (!t->error.empty()) {
                ++row.failed_trials;
                continue;
            }
            ++row.trials;
            success.push_back(t->metrics.success ? 1.0 : 0.0);
            time.push_back(t->metrics.completion_time);
            length.push_back(t->metrics.path_length);
            coverage.push_back(t->metrics.final_coverage);
            row.safety_violations += t->metrics.safety_violations;
        }
        std::tie(row.success_mean, row.success_std) = stats(success);
        std::tie(row.time_mean, row.time_std) = stats(time);
        std::tie(row.length_mean, row.length_std) = stats(length);
        std::tie(row.coverage_mean, row.coverage_std) = stats(coverage);
        rows.push_back(row);
    }
    return rows;
}

BatchResult run_batch(const BatchSpec& spec, const TrialSink& sink)
{
    if (spec.environments.empty()) throw ConfigError("must not be empty", "environments");
    if (spec.seeds.empty()) throw ConfigError("must not be empty", "seeds");
    if (spec.strategies.empty()) throw ConfigError("must not be empty", "strategies");

    BatchResult result;
    std::vector<ScenarioConfig> configs;
    for (const auto& env : spec.environments)
        for (auto strategy : spec.strategies)
            for (auto seed : spec.seeds) {
                configs.push_back(trial_config(env.config, strategy, seed));
                result.trials.push_back({env.environment, strategy, seed, {}, {}});
            }
    for (const auto& c : configs) c.validate();

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            try {
                auto trial = run_trial(configs[i]);
                result.trials[i].metrics = trial.metrics;
                if (sink) sink(i, trial);
            } catch (const std::exception& e) {
                result.trials[i].error = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(configs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    result.aggregate = aggregate(result.trials);
    return result;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows)
{
    std::ostringstream os;
    os << "environment,strategy,trials,failed_trials,success_mean,success_std,time_mean,time_std,length_mean,length_std,"
          "coverage_mean,coverage_std,safety_violations\n";
    for (const auto& r : rows) {
        os << r.environment << ',' << frontier::to_string(r.strategy) << ',' << r.trials << ',' << r.failed_trials << ','
           << format_double(r.success_mean) << ',' << format_double(r.success_std) << ','
           << format_double(r.time_mean) << ',' << format_double(r.time_std) << ','
           << format_double(r.length_mean) << ',' << format_double(r.length_std) << ','
           << format_double(r.coverage_mean) << ',' << format_double(r.coverage_std) << ','
           << r.safety_violations << '\n';
    }
    return os.str();
}

std::string aggregate_table(const std::vector<AggregateRow>& rows)
{
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-6s %6s %16s %20s %18s %16s\n", "environment", "method", "trials",
                  "success", "time [s]", "length [m]", "coverage");
    os << line;
    for (const auto& r : rows) {
        char a[32], b[32], c[32], d[32];
        std::snprintf(a, sizeof a, "%.1f%% +- %.1f", 100.0 * r.success_mean, 100.0 * r.success_std);
        std::snprintf(b, sizeof b, "%.2f +- %.2f", r.time_mean, r.time_std);
        std::snprintf(c, sizeof c, "%.2f +- %.2f", r.length_mean, r.length_std);
        std::snprintf(d, sizeof d, "%.3f +- %.3f", r.coverage_mean, r.coverage_std);
        std::snprintf(line, sizeof line, "%-14s %-6s %6zu %16s %20s %18s %16s\n", r.environment.c_str(),
                      frontier::to_string(r.strategy).c_str(), r.trials, a, b, c, d);
        os << line;
    }
    return os.str();
}

}  // namespace psane::sim
