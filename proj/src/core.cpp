#include "psane/core.hpp"

#include <algorithm>

namespace psane {

void WorkspaceSpec::validate() const
{
    if (!(width_m > 0.0) || !std::isfinite(width_m))
        throw ConfigError("must be positive", "workspace.width_m");
    if (!(height_m > 0.0) || !std::isfinite(height_m))
        throw ConfigError("must be positive", "workspace.height_m");
    if (!(resolution > 0.0) || !std::isfinite(resolution))
        throw ConfigError("must be positive", "workspace.resolution");
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
        throw ConfigError("must be finite", "workspace.origin");
    if (nx() < 8 || ny() < 8)
        throw ConfigError("workspace must span at least 8 cells per axis", "workspace.resolution");
}

bool WorkspaceSpec::contains(Vec2 p) const
{
    constexpr double eps = 1e-9;
    const double half = 0.5 * resolution;
    return p.x >= origin.x - half - eps && p.y >= origin.y - half - eps &&
           p.x <= origin.x + (nx() - 0.5) * resolution + eps &&
           p.y <= origin.y + (ny() - 0.5) * resolution + eps;
}

CellIndex WorkspaceSpec::cell_of(Vec2 p) const
{
    const int ix = static_cast<int>(std::floor((p.x - origin.x) / resolution + 0.5));
    const int iy = static_cast<int>(std::floor((p.y - origin.y) / resolution + 0.5));
    return {std::clamp(ix, 0, nx() - 1), std::clamp(iy, 0, ny() - 1)};
}

}  // namespace psane
