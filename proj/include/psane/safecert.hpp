#pragma once

// Confidence intervals on the slip field and the Lipschitz-certified safe
// set grown from them.

#include "psane/core.hpp"

#include <cstdint>
#include <vector>

namespace psane::safecert {

/* Stand-in for an unbounded interval end. */
inline constexpr double kUnbounded = 1e9;
/* Slack on the certification predicate u + L d <= h, absorbing round-off in
 * distances computed from cell offsets. */
inline constexpr double kCertifySlack = 1e-9;

struct ConfidenceState {
    ScalarGrid lower;
    ScalarGrid upper;
    double beta = 4.0;
    /* Cumulative count of cells whose new interval missed the old one. */
    std::int64_t empty_intersections = 0;
    /* Cells that collapsed during the most recent update. */
    std::vector<std::size_t> last_collapsed;

    static ConfidenceState initial(const WorkspaceSpec& spec, double beta);
};

struct SafeSet {
    Mask mask;
    double threshold = 0.8;  // h
    double lipschitz = 1.0;  // L, slip per meter
    int epoch = 0;

    std::size_t size() const { return count_set(mask); }
};

/* Intersects each cell's interval with [mean - sqrt(beta) sd, mean + sqrt(beta) sd].
 * An empty intersection collapses the cell to the midpoint of the gap and is
 * counted. Throws ConfigError on shape mismatch or beta <= 0. */
ConfidenceState update_confidence(const ConfidenceState& state, const ScalarGrid& mean, const ScalarGrid& stddev,
                                  double beta);

enum class IterationOrder { Forward, Reverse };

/* Union over certifying cells x in S (u(x) <= h) of all cells within center
 * distance (h - u(x)) / L, together with S itself. */
SafeSet safe_expand(const SafeSet& safe, const ScalarGrid& upper, const WorkspaceSpec& spec,
                    IterationOrder order = IterationOrder::Forward);

struct InitialSafeSet {
    SafeSet safe;
    /* Start plus two offsets inside r0, used to bootstrap the GP. */
    std::vector<Vec2> bootstrap;
};

/* Disk of radius r0 around `start` (always including the start cell).
 * Throws ConfigError if start is outside the workspace or r0 <= 0. */
InitialSafeSet init_safe_set(const WorkspaceSpec& spec, Vec2 start, double r0, double h, double lipschitz);

/* |S| / |true-safe cells|; may exceed 1 for unsound sets. Throws DomainError
 * when the truth mask is empty. */
double coverage_ratio(const SafeSet& safe, const Mask& truth);

/* Cells within center distance `radius` (meters) of `center`, clipped to
 * the grid. */
std::vector<CellIndex> disk_cells(const WorkspaceSpec& spec, CellIndex center, double radius);

}  // namespace psane::safecert
