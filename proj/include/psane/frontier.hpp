#pragma once

// Frontier extraction on the certified safe set, reachability filtering,
// candidate scoring and subgoal selection.

#include "psane/core.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psane::frontier {

struct Contour {
    int id = 0;
    bool is_hole = false;
    /* Border pixels in tracing order (may repeat at pinch points). */
    std::vector<CellIndex> points;
};

struct FrontierCell {
    CellIndex cell;
    int contour_id = 0;
};

struct FrontierSet {
    /* Only contours holding at least one frontier cell. */
    std::vector<Contour> contours;
    /* Unique frontier cells in row-major order. */
    std::vector<FrontierCell> cells;
};

/* Traces every border of the set cells with Suzuki-Abe border following
 * (8-connected foreground, 4-connected background). Borders are returned in
 * raster discovery order; ids start at 2 as in the original numbering. */
std::vector<Contour> trace_borders(const Mask& mask);

/* Safe cells 4-adjacent to at least one in-bounds unsafe cell, grouped by
 * the border that first reaches them. Cells touching only the workspace edge
 * are not frontiers. */
FrontierSet extract_frontiers(const Mask& safe);

/* 8-connected component labels of the set cells; -1 elsewhere. Labels are
 * assigned in row-major order of each component's first cell. */
Grid<int> label_components(const Mask& mask);

struct Reachable {
    std::vector<FrontierCell> cells;
    int component = -1;
};

/* Frontier cells in the robot's 8-connected safe component. Throws
 * SafetyBreach when the robot's cell is not safe. */
Reachable reachable_frontiers(const FrontierSet& frontiers, const Mask& safe, const WorkspaceSpec& spec, Vec2 robot);

/* Number of cells outside `safe` with lower(x) + L |x - x'| <= h, searched
 * within radius max(0, (h - lower(x)) / L). */
int expansion_count(const WorkspaceSpec& spec, CellIndex cell, const ScalarGrid& lower, const Mask& safe,
                    double lipschitz, double h);

double expansion_probability(int g, double k_e);

/* exp(-k_g (|x - goal| + |x - robot|)), or exp(-k_g |x - robot|) without a
 * goal. */
double goal_value(Vec2 candidate, std::optional<Vec2> goal, Vec2 robot, double k_g);

struct FrontierCandidate {
    CellIndex cell;
    Vec2 location;
    int g = 0;
    double p_e = 0.0;
    double v_goal = 0.0;
    double v_overall = 0.0;
    int component_id = -1;
    int contour_id = 0;
};

struct ScoringParams {
    double h = 0.8;
    double lipschitz = 1.0;
    double k_e = 0.1;
    double k_g = 0.1;
};

std::vector<FrontierCandidate> score_candidates(const WorkspaceSpec& spec, const Reachable& reachable,
                                                const ScalarGrid& lower, const Mask& safe,
                                                const ScoringParams& params, std::optional<Vec2> goal, Vec2 robot);

/* Indices of candidates not strictly dominated in (p_e, v_goal), ordered by
 * row-major cell index. Throws DomainError on empty input. */
std::vector<std::size_t> pareto_front(std::span<const FrontierCandidate> candidates);

enum class StrategyKind { NGH, SGH, PGH, PSANE };
enum class Objective { Goal, Expansion };

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& name);
std::string to_string(Objective objective);
Objective objective_from_string(const std::string& name);

struct SelectionStrategy {
    StrategyKind kind = StrategyKind::PSANE;
    std::vector<Objective> schedule{Objective::Goal, Objective::Goal, Objective::Expansion};
    std::size_t phase = 0;
};

struct Selection {
    Vec2 location;
    /* Index into the candidate list; empty when heading straight for the
     * goal (NGH). */
    std::optional<std::size_t> candidate;
    std::optional<Objective> objective;
    std::vector<std::size_t> pareto;
};

/* Chooses the next subgoal. PGH advances its schedule on every call.
 * Throws NoFrontier on an empty candidate list (except NGH) and ConfigError
 * for NGH without a goal. */
Selection select_subgoal(SelectionStrategy& strategy, std::span<const FrontierCandidate> candidates,
                         std::optional<Vec2> goal, Vec2 robot);

}  // namespace psane::frontier
