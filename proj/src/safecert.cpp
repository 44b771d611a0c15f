#include "psane/safecert.hpp"

#include <algorithm>
#include <cmath>

namespace psane::safecert {

ConfidenceState ConfidenceState::initial(const WorkspaceSpec& spec, double beta)
{
    ConfidenceState s;
    s.lower = ScalarGrid(spec, -kUnbounded);
    s.upper = ScalarGrid(spec, kUnbounded);
    s.beta = beta;
    return s;
}

ConfidenceState update_confidence(const ConfidenceState& state, const ScalarGrid& mean, const ScalarGrid& stddev,
                                  double beta)
{
    if (!state.lower.same_shape(mean) || !state.lower.same_shape(stddev) || !state.upper.same_shape(mean))
        throw ConfigError("confidence grids do not match the workspace", "workspace");
    if (!(beta > 0.0)) throw ConfigError("must be positive", "beta");

    const double scale = std::sqrt(beta);
    ConfidenceState next;
    next.lower = state.lower;
    next.upper = state.upper;
    next.beta = beta;
    next.empty_intersections = state.empty_intersections;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        const double lo = std::max(state.lower[i], mean[i] - scale * stddev[i]);
        const double hi = std::min(state.upper[i], mean[i] + scale * stddev[i]);
        if (lo > hi) {
            const double mid = 0.5 * (lo + hi);
            next.lower[i] = next.upper[i] = mid;
            ++next.empty_intersections;
            next.last_collapsed.push_back(i);
        } else {
            next.lower[i] = lo;
            next.upper[i] = hi;
        }
    }
    return next;
}

std::vector<CellIndex> disk_cells(const WorkspaceSpec& spec, CellIndex center, double radius)
{
    std::vector<CellIndex> out;
    if (radius < 0.0) return out;
    const double res = spec.resolution;
    const int reach = static_cast<int>(std::floor(radius / res + 1e-6));
    const double r2 = radius * radius + 1e-9;
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
            const CellIndex c{center.ix + dx, center.iy + dy};
            if (!spec.in_bounds(c)) continue;
            if ((dx * dx + dy * dy) * res * res <= r2) out.push_back(c);
        }
    return out;
}

SafeSet safe_expand(const SafeSet& safe, const ScalarGrid& upper, const WorkspaceSpec& spec, IterationOrder order)
{
    if (!safe.mask.same_shape(upper)) throw ConfigError("upper bound grid does not match the safe set", "workspace");

    SafeSet next = safe;
    next.epoch = safe.epoch + 1;
    const double h = safe.threshold;
    const double lip = safe.lipschitz;
    const double res = spec.resolution;
    const int nx = spec.nx();
    const int ny = spec.ny();

    auto stamp = [&](std::size_t i) {
        if (!safe.mask[i]) return;
        const double u = upper[i];
        if (!(u <= h)) return;
        const CellIndex c = spec.unlinear(i);
        const int reach = static_cast<int>(std::floor((h - u) / lip / res + 1e-6));
        for (int dy = -reach; dy <= reach; ++dy) {
            const int iy = c.iy + dy;
            if (iy < 0 || iy >= ny) continue;
            for (int dx = -reach; dx <= reach; ++dx) {
                const int ix = c.ix + dx;
                if (ix < 0 || ix >= nx) continue;
                const double d = res * std::sqrt(static_cast<double>(dx * dx + dy * dy));
                if (u + lip * d <= h + kCertifySlack) next.mask(ix, iy) = 1;
            }
        }
    };

    const std::size_t n = safe.mask.size();
    if (order == IterationOrder::Forward) {
        for (std::size_t i = 0; i < n; ++i) stamp(i);
    } else {
        for (std::size_t i = n; i-- > 0;) stamp(i);
    }
    return next;
}

InitialSafeSet init_safe_set(const WorkspaceSpec& spec, Vec2 start, double r0, double h, double lipschitz)
{
    if (!spec.contains(start)) throw ConfigError("start lies outside the workspace", "start");
    if (!(r0 > 0.0)) throw ConfigError("must be positive", "r0");

    InitialSafeSet init;
    init.safe.mask = Mask(spec, 0);
    init.safe.threshold = h;
    init.safe.lipschitz = lipschitz;
    const CellIndex sc = spec.cell_of(start);
    init.safe.mask(sc) = 1;
    const int reach = static_cast<int>(std::ceil(r0 / spec.resolution)) + 1;
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
            const CellIndex c{sc.ix + dx, sc.iy + dy};
            if (spec.in_bounds(c) && distance(spec.cell_center(c), start) <= r0 + 1e-9) init.safe.mask(c) = 1;
        }

    auto offset = [&](Vec2 d) {
        Vec2 p = start + d;
        if (!spec.contains(p)) p = start - d;
        return p;
    };
    init.bootstrap = {start, offset({0.5 * r0, 0.0}), offset({0.0, 0.5 * r0})};
    return init;
}

double coverage_ratio(const SafeSet& safe, const Mask& truth)
{
    const std::size_t truth_cells = count_set(truth);
    if (truth_cells == 0) throw DomainError("ground truth has no safe cells");
    return static_cast<double>(safe.size()) / static_cast<double>(truth_cells);
}

}  // namespace psane::safecert
