#include "psane/nav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>

namespace psane::nav {

namespace {

constexpr std::array<int, 8> kDx{1, -1, 0, 0, 1, 1, -1, -1};
constexpr std::array<int, 8> kDy{0, 0, 1, -1, 1, -1, 1, -1};

/* Move from c by neighbour d is allowed: target unblocked and, for
 * diagonals, both orthogonal corner cells unblocked. */
bool can_step(const Mask& blocked, CellIndex c, int d)
{
    const int x = c.ix + kDx[d];
    const int y = c.iy + kDy[d];
    if (!blocked.in_bounds(x, y) || blocked(x, y)) return false;
    if (d >= 4) {
        if (blocked(c.ix + kDx[d], c.iy) || blocked(c.ix, c.iy + kDy[d])) return false;
    }
    return true;
}

}  // namespace

ObstacleMap build_obstacle_map(const safecert::SafeSet& safe, double margin, const WorkspaceSpec& spec)
{
    if (!(margin >= 0.0)) throw ConfigError("must be >= 0", "margin");
    ObstacleMap obs;
    obs.margin = margin;
    obs.margin_cells = static_cast<int>(std::ceil(margin / spec.resolution - 1e-9));
    const int m = obs.margin_cells;
    const Mask& s = safe.mask;
    obs.blocked = Mask(s.nx(), s.ny(), 1);

    std::vector<std::array<int, 2>> disk;
    for (int dy = -m; dy <= m; ++dy)
        for (int dx = -m; dx <= m; ++dx)
            if (dx * dx + dy * dy <= m * m) disk.push_back({dx, dy});

    bool any_free = false;
    for (int iy = 0; iy < s.ny(); ++iy)
        for (int ix = 0; ix < s.nx(); ++ix) {
            if (!s(ix, iy)) continue;
            bool keep = true;
            for (const auto& d : disk) {
                const int x = ix + d[0];
                const int y = iy + d[1];
                if (s.in_bounds(x, y) && !s(x, y)) {
                    keep = false;
                    break;
                }
            }
            if (keep) {
                obs.blocked(ix, iy) = 0;
                any_free = true;
            }
        }
    if (!any_free) throw RobotBoxedIn("safety margin erodes the entire safe set");
    return obs;
}

Mask reachable_free(const ObstacleMap& obstacles, const WorkspaceSpec& spec, Vec2 from)
{
    const Mask& blocked = obstacles.blocked;
    Mask seen(blocked.nx(), blocked.ny(), 0);
    const CellIndex start = spec.cell_of(from);
    if (blocked(start)) return seen;
    std::deque<CellIndex> queue{start};
    seen(start) = 1;
    while (!queue.empty()) {
        const CellIndex c = queue.front();
        queue.pop_front();
        for (int d = 0; d < 8; ++d) {
            if (!can_step(blocked, c, d)) continue;
            const CellIndex n{c.ix + kDx[d], c.iy + kDy[d]};
            if (seen(n)) continue;
            seen(n) = 1;
            queue.push_back(n);
        }
    }
    return seen;
}

std::optional<CellIndex> snap_target(const ObstacleMap& obstacles, const WorkspaceSpec& spec, Vec2 to,
                                     const Mask* allowed)
{
    auto usable = [&](CellIndex c) { return !obstacles.blocked(c) && (!allowed || (*allowed)(c)); };
    const CellIndex tc = spec.cell_of(to);
    if (usable(tc)) return tc;

    const double radius = 2.0 * obstacles.margin;
    const int reach = static_cast<int>(std::ceil(radius / spec.resolution)) + 1;
    std::optional<CellIndex> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
            const CellIndex c{tc.ix + dx, tc.iy + dy};
            if (!spec.in_bounds(c) || !usable(c)) continue;
            const double d = distance(spec.cell_center(c), to);
            if (d > radius + 1e-9) continue;
            if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && spec.linear(c) < spec.linear(*best))) {
                best = c;
                best_d = d;
            }
        }
    return best;
}

Path plan_path(const ObstacleMap& obstacles, const WorkspaceSpec& spec, Vec2 from, Vec2 to)
{
    const Mask& blocked = obstacles.blocked;
    const CellIndex start = spec.cell_of(from);
    if (blocked(start)) throw NoSafePath("path start lies in blocked space");
    const Mask reach = reachable_free(obstacles, spec, from);
    const auto target = snap_target(obstacles, spec, to, &reach);
    if (!target) throw NoSafePath("no reachable unblocked cell near the destination");

    const double res = spec.resolution;
    const std::size_t n = blocked.size();
    const std::size_t s = spec.linear(start);
    const std::size_t t = spec.linear(*target);
    std::vector<double> g(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(n, n);
    std::vector<std::uint8_t> closed(n, 0);
    auto heuristic = [&](CellIndex c) {
        return res * std::hypot(static_cast<double>(c.ix - target->ix), static_cast<double>(c.iy - target->iy));
    };

    using Entry = std::pair<double, std::size_t>;  // (f, linear index), min-ordered
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    g[s] = 0.0;
    open.push({heuristic(start), s});
    while (!open.empty()) {
        const auto [f, i] = open.top();
        open.pop();
        if (closed[i]) continue;
        closed[i] = 1;
        if (i == t) break;
        const CellIndex c = spec.unlinear(i);
        for (int d = 0; d < 8; ++d) {
            if (!can_step(blocked, c, d)) continue;
            const CellIndex nb{c.ix + kDx[d], c.iy + kDy[d]};
            const std::size_t j = spec.linear(nb);
            if (closed[j]) continue;
            const double step = d < 4 ? res : res * std::numbers::sqrt2;
            const double cand = g[i] + step;
            if (cand < g[j]) {
                g[j] = cand;
                parent[j] = i;
                open.push({cand + heuristic(nb), j});
            }
        }
    }
    if (!closed[t]) throw NoSafePath("destination unreachable");

    Path path;
    path.target = *target;
    path.cost = g[t];
    for (std::size_t i = t; i != n; i = parent[i]) path.cells.push_back(spec.unlinear(i));
    std::reverse(path.cells.begin(), path.cells.end());
    for (std::size_t k = 1; k < path.cells.size(); ++k) path.waypoints.push_back(spec.cell_center(path.cells[k]));
    if (path.waypoints.empty()) path.waypoints.push_back(spec.cell_center(start));
    return path;
}

RobotState step_robot(RobotState state, Vec2 waypoint, double dt, const terrain::SlipField& truth,
                      const RobotParams& params)
{
    state.time += dt;
    const Vec2 delta = waypoint - state.position;
    const double dist = delta.norm();
    if (dist > 1e-12) {
        const double desired = std::atan2(delta.y, delta.x);
        const double err = std::remainder(desired - state.heading, 2.0 * std::numbers::pi);
        const double max_turn = params.turn_rate * dt;
        if (std::abs(err) > max_turn + 1e-12) {
            state.heading = std::remainder(state.heading + std::copysign(max_turn, err), 2.0 * std::numbers::pi);
        } else {
            state.heading = desired;
            const double slip = truth.value_at(state.position);
            if (slip >= params.s_stuck) {
                state.immobilized_time += dt;
            } else {
                const double step = std::min(dist, state.commanded_speed * (1.0 - slip) * dt);
                state.position = state.position + (step / dist) * delta;
                state.distance_traveled += step;
            }
        }
    }
    state.path_log.push_back({state.time, state.position});
    return state;
}

std::string to_string(LegOutcome outcome)
{
    switch (outcome) {
    case LegOutcome::Arrived: return "arrived";
    case LegOutcome::GoalReached: return "goal_reached";
    case LegOutcome::TravelCap: return "travel_cap";
    case LegOutcome::TimeBudget: return "time_budget";
    case LegOutcome::Immobilized: return "immobilized";
    }
    return "arrived";
}

LegResult navigate_to(RobotState& state, std::span<const Vec2> waypoints, const LegContext& ctx,
                      const RobotParams& params, const LegLimits& limits)
{
    LegResult leg;
    if (waypoints.empty()) return leg;
    const auto& truth = *ctx.truth;
    const WorkspaceSpec& spec = truth.spec;
    const Vec2 last = waypoints.back();
    if (distance(state.position, last) <= params.arrival_tolerance) return leg;

    CellIndex cell = spec.cell_of(state.position);
    std::size_t wi = 0;
    while (true) {
        if (state.time >= limits.time_budget - 1e-9) {
            leg.outcome = LegOutcome::TimeBudget;
            return leg;
        }
        while (wi + 1 < waypoints.size() && distance(state.position, waypoints[wi]) < 1e-9) ++wi;

        const Vec2 before = state.position;
        state = step_robot(std::move(state), waypoints[wi], params.dt, truth, params);
        const double moved = distance(before, state.position);
        leg.traveled += moved;

        TrajectoryPoint tp;
        if (moved > 0.0) {
            state.since_sample += moved;
            const Vec2 dir = (1.0 / moved) * (state.position - before);
            while (state.since_sample >= params.sample_spacing - 1e-9) {
                const double overshoot = std::max(0.0, state.since_sample - params.sample_spacing);
                if (ctx.measure) ctx.measure(state.position - overshoot * dir);
                ++leg.measurements;
                state.since_sample = std::max(0.0, state.since_sample - params.sample_spacing);
                tp.event = "measure";
            }
        }

        const CellIndex now = spec.cell_of(state.position);
        if (!(now == cell)) {
            cell = now;
            if (truth.grid(cell) > ctx.h) {
                ++leg.safety_violations;
                tp.event = "unsafe_entry";
            }
        }
        tp.t = state.time;
        tp.position = state.position;
        tp.s_true = truth.value_at(state.position);
        tp.in_safe_set = ctx.safe ? (*ctx.safe)(cell) != 0 : false;
        if (ctx.safe && !tp.in_safe_set) ++leg.steps_outside_safe_set;
        leg.trajectory.push_back(std::move(tp));

        if (state.immobilized_time > params.t_stuck) {
            leg.outcome = LegOutcome::Immobilized;
            return leg;
        }
        if (limits.goal && distance(state.position, *limits.goal) <= limits.goal_tolerance) {
            leg.outcome = LegOutcome::GoalReached;
            return leg;
        }
        if (distance(state.position, last) < 1e-9) {
            leg.outcome = LegOutcome::Arrived;
            return leg;
        }
        if (leg.traveled >= limits.max_travel - 1e-9) {
            leg.outcome = LegOutcome::TravelCap;
            return leg;
        }
    }
}

}  // namespace psane::nav
