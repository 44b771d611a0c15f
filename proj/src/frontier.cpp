#include "psane/frontier.hpp"

#include "psane/safecert.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <numeric>

namespace psane::frontier {

namespace {

// Neighbour offsets (row, col) in clockwise order starting east, with rows
// indexing iy and columns ix of a zero-framed copy of the mask.
constexpr std::array<int, 8> kDr{0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDc{1, 1, 0, -1, -1, -1, 0, 1};

int direction(int dr, int dc)
{
    for (int d = 0; d < 8; ++d)
        if (kDr[d] == dr && kDc[d] == dc) return d;
    return 0;
}

bool row_major_less(CellIndex a, CellIndex b)
{
    return a.iy != b.iy ? a.iy < b.iy : a.ix < b.ix;
}

bool has_unsafe_4_neighbour(const Mask& safe, int ix, int iy)
{
    static constexpr std::array<std::array<int, 2>, 4> n4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (const auto& d : n4) {
        const int x = ix + d[0];
        const int y = iy + d[1];
        if (safe.in_bounds(x, y) && !safe(x, y)) return true;
    }
    return false;
}

}  // namespace

std::vector<Contour> trace_borders(const Mask& mask)
{
    const int rows = mask.ny() + 2;
    const int cols = mask.nx() + 2;
    std::vector<int> f(static_cast<std::size_t>(rows) * cols, 0);
    auto at = [&](int r, int c) -> int& { return f[static_cast<std::size_t>(r) * cols + c]; };
    for (int iy = 0; iy < mask.ny(); ++iy)
        for (int ix = 0; ix < mask.nx(); ++ix) at(iy + 1, ix + 1) = mask(ix, iy) ? 1 : 0;

    std::vector<Contour> contours;
    int nbd = 1;
    for (int r = 1; r < rows - 1; ++r) {
        for (int c = 1; c < cols - 1; ++c) {
            const int v = at(r, c);
            int r2 = 0;
            int c2 = 0;
            bool hole = false;
            if (v == 1 && at(r, c - 1) == 0) {
                r2 = r;
                c2 = c - 1;
            } else if (v >= 1 && at(r, c + 1) == 0) {
                r2 = r;
                c2 = c + 1;
                hole = true;
            } else {
                continue;
            }
            ++nbd;
            Contour contour;
            contour.id = nbd;
            contour.is_hole = hole;

            // Clockwise search around the start pixel for any foreground.
            const int d0 = direction(r2 - r, c2 - c);
            int r1 = -1;
            int c1 = -1;
            for (int k = 0; k < 8; ++k) {
                const int d = (d0 + k) % 8;
                if (at(r + kDr[d], c + kDc[d]) != 0) {
                    r1 = r + kDr[d];
                    c1 = c + kDc[d];
                    break;
                }
            }
            if (r1 < 0) {
                at(r, c) = -nbd;
                contour.points.push_back({c - 1, r - 1});
                contours.push_back(std::move(contour));
                continue;
            }

            r2 = r1;
            c2 = c1;
            int r3 = r;
            int c3 = c;
            while (true) {
                // Counter-clockwise from (r2, c2) around (r3, c3).
                const int d2 = direction(r2 - r3, c2 - c3);
                bool east_background = false;
                int r4 = r3;
                int c4 = c3;
                for (int k = 1; k <= 8; ++k) {
                    const int d = (d2 - k + 8) % 8;
                    const int rr = r3 + kDr[d];
                    const int cc = c3 + kDc[d];
                    if (at(rr, cc) != 0) {
                        r4 = rr;
                        c4 = cc;
                        break;
                    }
                    if (d == 0) east_background = true;
                }
                if (east_background)
                    at(r3, c3) = -nbd;
                else if (at(r3, c3) == 1)
                    at(r3, c3) = nbd;
                contour.points.push_back({c3 - 1, r3 - 1});

                if (r4 == r && c4 == c && r3 == r1 && c3 == c1) break;
                r2 = r3;
                c2 = c3;
                r3 = r4;
                c3 = c4;
            }
            contours.push_back(std::move(contour));
        }
    }
    return contours;
}

FrontierSet extract_frontiers(const Mask& safe)
{
    FrontierSet out;
    Grid<int> owner(safe.nx(), safe.ny(), 0);
    for (auto& contour : trace_borders(safe)) {
        bool any = false;
        for (const CellIndex& p : contour.points) {
            if (!has_unsafe_4_neighbour(safe, p.ix, p.iy)) continue;
            any = true;
            if (owner(p) == 0) owner(p) = contour.id;
        }
        if (any) out.contours.push_back(std::move(contour));
    }
    for (int iy = 0; iy < safe.ny(); ++iy)
        for (int ix = 0; ix < safe.nx(); ++ix)
            if (owner(ix, iy) != 0) out.cells.push_back({{ix, iy}, owner(ix, iy)});
    return out;
}

Grid<int> label_components(const Mask& mask)
{
    Grid<int> labels(mask.nx(), mask.ny(), -1);
    int next = 0;
    std::deque<CellIndex> queue;
    for (int iy = 0; iy < mask.ny(); ++iy)
        for (int ix = 0; ix < mask.nx(); ++ix) {
            if (!mask(ix, iy) || labels(ix, iy) >= 0) continue;
            labels(ix, iy) = next;
            queue.push_back({ix, iy});
            while (!queue.empty()) {
                const CellIndex c = queue.front();
                queue.pop_front();
                for (int d = 0; d < 8; ++d) {
                    const int x = c.ix + kDc[d];
                    const int y = c.iy + kDr[d];
                    if (mask.in_bounds(x, y) && mask(x, y) && labels(x, y) < 0) {
                        labels(x, y) = next;
                        queue.push_back({x, y});
                    }
                }
            }
            ++next;
        }
    return labels;
}

Reachable reachable_frontiers(const FrontierSet& frontiers, const Mask& safe, const WorkspaceSpec& spec, Vec2 robot)
{
    const CellIndex rc = spec.cell_of(robot);
    if (!spec.contains(robot) || !safe(rc)) throw SafetyBreach("robot is outside the certified safe set");
    const Grid<int> labels = label_components(safe);
    Reachable out;
    out.component = labels(rc);
    for (const auto& fc : frontiers.cells)
        if (labels(fc.cell) == out.component) out.cells.push_back(fc);
    return out;
}

int expansion_count(const WorkspaceSpec& spec, CellIndex cell, const ScalarGrid& lower, const Mask& safe,
                    double lipschitz, double h)
{
    const double l = lower(cell);
    const double radius = std::max(0.0, (h - l) / lipschitz);
    const double res = spec.resolution;
    const int reach = static_cast<int>(std::floor(radius / res + 1e-6));
    int count = 0;
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
            const CellIndex c{cell.ix + dx, cell.iy + dy};
            if (!spec.in_bounds(c) || safe(c)) continue;
            const double d = res * std::sqrt(static_cast<double>(dx * dx + dy * dy));
            if (l + lipschitz * d <= h + safecert::kCertifySlack) ++count;
        }
    return count;
}

double expansion_probability(int g, double k_e)
{
    return 1.0 - std::exp(-k_e * static_cast<double>(g));
}

double goal_value(Vec2 candidate, std::optional<Vec2> goal, Vec2 robot, double k_g)
{
    double d = distance(candidate, robot);
    if (goal) d += distance(candidate, *goal);
    return std::exp(-k_g * d);
}

std::vector<FrontierCandidate> score_candidates(const WorkspaceSpec& spec, const Reachable& reachable,
                                                const ScalarGrid& lower, const Mask& safe,
                                                const ScoringParams& params, std::optional<Vec2> goal, Vec2 robot)
{
    std::vector<FrontierCandidate> out;
    out.reserve(reachable.cells.size());
    for (const auto& fc : reachable.cells) {
        FrontierCandidate c;
        c.cell = fc.cell;
        c.location = spec.cell_center(fc.cell);
        c.g = expansion_count(spec, fc.cell, lower, safe, params.lipschitz, params.h);
        c.p_e = expansion_probability(c.g, params.k_e);
        c.v_goal = goal_value(c.location, goal, robot, params.k_g);
        c.v_overall = c.v_goal * c.p_e;
        c.component_id = reachable.component;
        c.contour_id = fc.contour_id;
        out.push_back(c);
    }
    return out;
}

std::vector<std::size_t> pareto_front(std::span<const FrontierCandidate> candidates)
{
    if (candidates.empty()) throw DomainError("pareto_front of an empty candidate set");

    // Sweep in decreasing p_e. A point survives iff it holds the largest
    // v_goal among equal p_e and beats every v_goal seen at strictly larger p_e.
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ca = candidates[a];
        const auto& cb = candidates[b];
        if (ca.p_e != cb.p_e) return ca.p_e > cb.p_e;
        return ca.v_goal > cb.v_goal;
    });

    std::vector<std::size_t> front;
    double best_v_at_higher_p = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        const double p = candidates[order[i]].p_e;
        const double group_best = candidates[order[i]].v_goal;
        while (j < order.size() && candidates[order[j]].p_e == p) {
            const double v = candidates[order[j]].v_goal;
            if (v == group_best && v > best_v_at_higher_p) front.push_back(order[j]);
            ++j;
        }
        best_v_at_higher_p = std::max(best_v_at_higher_p, group_best);
        i = j;
    }
    std::sort(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
        return row_major_less(candidates[a].cell, candidates[b].cell);
    });
    return front;
}

std::string to_string(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::NGH: return "NGH";
    case StrategyKind::SGH: return "SGH";
    case StrategyKind::PGH: return "PGH";
    case StrategyKind::PSANE: return "PSANE";
    }
    return "PSANE";
}

StrategyKind strategy_from_string(const std::string& name)
{
    if (name == "NGH") return StrategyKind::NGH;
    if (name == "SGH") return StrategyKind::SGH;
    if (name == "PGH") return StrategyKind::PGH;
    if (name == "PSANE") return StrategyKind::PSANE;
    throw ConfigError("unknown strategy '" + name + "' (expected NGH, SGH, PGH or PSANE)", "strategy");
}

std::string to_string(Objective objective)
{
    return objective == Objective::Goal ? "goal" : "expansion";
}

Objective objective_from_string(const std::string& name)
{
    if (name == "goal") return Objective::Goal;
    if (name == "expansion") return Objective::Expansion;
    throw ConfigError("unknown objective '" + name + "' (expected goal or expansion)", "pgh_schedule");
}

namespace {

/* Index in `pool` maximizing (primary, secondary), ties to the lowest cell. */
template <typename Primary, typename Secondary>
std::size_t argmax(std::span<const FrontierCandidate> candidates, const std::vector<std::size_t>& pool,
                   Primary primary, Secondary secondary)
{
    std::size_t best = pool.front();
    for (std::size_t idx : pool) {
        const auto& c = candidates[idx];
        const auto& b = candidates[best];
        const double pc = primary(c);
        const double pb = primary(b);
        if (pc > pb) {
            best = idx;
        } else if (pc == pb) {
            const double sc = secondary(c);
            const double sb = secondary(b);
            if (sc > sb || (sc == sb && row_major_less(c.cell, b.cell))) best = idx;
        }
    }
    return best;
}

}  // namespace

Selection select_subgoal(SelectionStrategy& strategy, std::span<const FrontierCandidate> candidates,
                         std::optional<Vec2> goal, Vec2 robot)
{
    (void)robot;
    Selection sel;
    if (strategy.kind == StrategyKind::NGH) {
        if (!goal) throw ConfigError("NGH needs a goal", "strategy");
        sel.location = *goal;
        return sel;
    }
    if (candidates.empty()) throw NoFrontier("no reachable frontier");

    auto v_goal = [](const FrontierCandidate& c) { return c.v_goal; };
    auto p_e = [](const FrontierCandidate& c) { return c.p_e; };
    auto v_overall = [](const FrontierCandidate& c) { return c.v_overall; };
    auto none = [](const FrontierCandidate&) { return 0.0; };

    std::size_t chosen = 0;
    switch (strategy.kind) {
    case StrategyKind::SGH: {
        std::vector<std::size_t> all(candidates.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        chosen = argmax(candidates, all, v_goal, none);
        sel.objective = Objective::Goal;
        break;
    }
    case StrategyKind::PGH: {
        sel.pareto = pareto_front(candidates);
        if (strategy.schedule.empty()) throw ConfigError("schedule must not be empty", "pgh_schedule");
        const Objective obj = strategy.schedule[strategy.phase % strategy.schedule.size()];
        ++strategy.phase;
        chosen = obj == Objective::Goal ? argmax(candidates, sel.pareto, v_goal, p_e)
                                        : argmax(candidates, sel.pareto, p_e, v_goal);
        sel.objective = obj;
        break;
    }
    case StrategyKind::PSANE:
    default: {
        sel.pareto = pareto_front(candidates);
        chosen = argmax(candidates, sel.pareto, v_overall, none);
        if (candidates[chosen].v_overall <= 0.0) chosen = argmax(candidates, sel.pareto, v_goal, none);
        break;
    }
    }
    sel.candidate = chosen;
    sel.location = candidates[chosen].location;
    return sel;
}

}  // namespace psane::frontier
