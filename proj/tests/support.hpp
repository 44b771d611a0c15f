#pragma once

// Small generators and brute-force references shared by the unit tests.

#include "psane/core.hpp"

#include <random>
#include <vector>

namespace testsupport {

using psane::Mask;

inline Mask random_mask(std::mt19937_64& rng, int nx, int ny, double density)
{
    std::bernoulli_distribution on(density);
    Mask m(nx, ny, 0);
    for (auto& v : m.values()) v = on(rng) ? 1 : 0;
    return m;
}

/* Annulus of safe cells between radii r_in and r_out around (cx, cy). */
inline Mask ring_mask(int nx, int ny, double cx, double cy, double r_in, double r_out)
{
    Mask m(nx, ny, 0);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            m(x, y) = (d >= r_in && d <= r_out) ? 1 : 0;
        }
    return m;
}

inline Mask block_mask(int nx, int ny, int x0, int y0, int x1, int y1)
{
    Mask m(nx, ny, 0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) m(x, y) = 1;
    return m;
}

/* Safe cells with at least one in-bounds 4-neighbour that is unsafe. */
inline std::vector<psane::CellIndex> scan_frontier(const Mask& m)
{
    std::vector<psane::CellIndex> out;
    const int dx[] = {1, -1, 0, 0};
    const int dy[] = {0, 0, 1, -1};
    for (int y = 0; y < m.ny(); ++y)
        for (int x = 0; x < m.nx(); ++x) {
            if (!m(x, y)) continue;
            for (int k = 0; k < 4; ++k) {
                const int u = x + dx[k], v = y + dy[k];
                if (m.in_bounds(u, v) && !m(u, v)) {
                    out.push_back({x, y});
                    break;
                }
            }
        }
    return out;
}

inline psane::WorkspaceSpec small_spec(int nx, int ny, double res)
{
    psane::WorkspaceSpec s;
    s.width_m = nx * res;
    s.height_m = ny * res;
    s.resolution = res;
    s.origin = {res / 2, res / 2};
    return s;
}

}  // namespace testsupport
