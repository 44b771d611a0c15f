#pragma once

// Margin-buffered obstacle grids, shortest safe paths over them, and a
// slip-affected kinematic robot that follows those paths.

#include "psane/core.hpp"
#include "psane/safecert.hpp"
#include "psane/terrain.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psane::nav {

struct ObstacleMap {
    Mask blocked;
    double margin = 0.0;
    int margin_cells = 0;
};

/* Erodes the safe set by a disk of ceil(margin / resolution) cells; blocked
 * is the complement of the eroded set. Cells beyond the workspace edge do
 * not erode. Throws RobotBoxedIn when nothing remains unblocked. */
ObstacleMap build_obstacle_map(const safecert::SafeSet& safe, double margin, const WorkspaceSpec& spec);

/* Unblocked cells reachable from `from` by 8-connected moves; diagonal moves
 * need both adjacent orthogonal cells unblocked. Empty when `from` is blocked. */
Mask reachable_free(const ObstacleMap& obstacles, const WorkspaceSpec& spec, Vec2 from);

/* Nearest unblocked cell to `to` within 2 * margin (center distance, ties
 * to the lowest row-major index), optionally restricted to `allowed`. */
std::optional<CellIndex> snap_target(const ObstacleMap& obstacles, const WorkspaceSpec& spec, Vec2 to,
                                     const Mask* allowed = nullptr);

struct Path {
    std::vector<CellIndex> cells;  // start cell first
    std::vector<Vec2> waypoints;   // centers of cells after the start
    double cost = 0.0;             // meters
    CellIndex target;
};

/* A* over unblocked cells with unit / sqrt(2) step costs and a Euclidean
 * heuristic; frontier ties break on (f, row-major index). The destination
 * is snapped with snap_target. Throws NoSafePath when `from` is blocked or
 * no path exists. */
Path plan_path(const ObstacleMap& obstacles, const WorkspaceSpec& spec, Vec2 from, Vec2 to);

struct RobotParams {
    double speed = 0.4;        // commanded, m/s
    double turn_rate = 1.5;    // rad/s, turning happens in place
    double dt = 0.1;           // s
    double s_stuck = 0.95;     // slip at which the robot stops making progress
    double t_stuck = 20.0;     // accumulated stuck time that ends a trial
    double arrival_tolerance = 0.5;
    double sample_spacing = 0.25;
};

struct PathPoint {
    double t = 0.0;
    Vec2 position;
};

struct RobotState {
    Vec2 position;
    double heading = 0.0;
    double commanded_speed = 0.4;
    std::vector<PathPoint> path_log;
    double distance_traveled = 0.0;
    double immobilized_time = 0.0;
    double time = 0.0;
    /* Odometer since the last measurement. */
    double since_sample = 0.0;
};

/* One control step toward `waypoint`: rotate in place at the bounded turn
 * rate until aligned, then translate at speed * (1 - slip) where slip is the
 * true value under the robot. Slip >= s_stuck adds dt to immobilized_time
 * instead of moving. */
RobotState step_robot(RobotState state, Vec2 waypoint, double dt, const terrain::SlipField& truth,
                      const RobotParams& params);

enum class LegOutcome { Arrived, GoalReached, TravelCap, TimeBudget, Immobilized };
std::string to_string(LegOutcome outcome);

struct LegLimits {
    double max_travel = 2.0;
    double time_budget = 1000.0;  // absolute trial time
    std::optional<Vec2> goal;
    double goal_tolerance = 0.5;
};

struct TrajectoryPoint {
    double t = 0.0;
    Vec2 position;
    double s_true = 0.0;
    bool in_safe_set = false;
    std::string event;
};

struct LegResult {
    LegOutcome outcome = LegOutcome::Arrived;
    double traveled = 0.0;
    int measurements = 0;
    /* Entries into cells whose true slip exceeds h. */
    int safety_violations = 0;
    /* Control steps that ended outside the certified safe set. */
    int steps_outside_safe_set = 0;
    std::vector<TrajectoryPoint> trajectory;
};

struct LegContext {
    const terrain::SlipField* truth = nullptr;
    const Mask* safe = nullptr;  // certified set during this leg
    double h = 0.8;
    /* Fired each sample_spacing meters of travel at the exact crossing point. */
    std::function<void(Vec2)> measure;
};

/* Follows `waypoints` to the last one, or until a limit or failure ends the
 * leg. A leg whose destination is already within arrival_tolerance is an
 * immediate arrival with no motion. */
LegResult navigate_to(RobotState& state, std::span<const Vec2> waypoints, const LegContext& ctx,
                      const RobotParams& params, const LegLimits& limits);

}  // namespace psane::nav
