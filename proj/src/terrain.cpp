#include "psane/terrain.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace psane::terrain {

std::string to_string(FieldKind kind)
{
    switch (kind) {
    case FieldKind::Smooth: return "smooth";
    case FieldKind::Heterogeneous: return "heterogeneous";
    case FieldKind::GpPrior: return "gp_prior";
    }
    return "smooth";
}

FieldKind field_kind_from_string(const std::string& name)
{
    if (name == "smooth") return FieldKind::Smooth;
    if (name == "heterogeneous") return FieldKind::Heterogeneous;
    if (name == "gp_prior") return FieldKind::GpPrior;
    throw ConfigError("unknown field kind '" + name + "'", "environment.kind");
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
    const Vec2 ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    if (len2 <= 0.0) return distance(p, a);
    const Vec2 ap = p - a;
    const double t = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
    return distance(p, a + t * ab);
}

Vec2 random_position(const WorkspaceSpec& spec, const std::vector<KeepOut>& keep_out,
                     std::mt19937_64& rng)
{
    const double half = 0.5 * spec.resolution;
    std::uniform_real_distribution<double> ux(spec.origin.x - half, spec.origin.x + (spec.nx() - 0.5) * spec.resolution);
    std::uniform_real_distribution<double> uy(spec.origin.y - half, spec.origin.y + (spec.ny() - 0.5) * spec.resolution);
    Vec2 p{};
    for (int attempt = 0; attempt < 1000; ++attempt) {
        p = {ux(rng), uy(rng)};
        const bool blocked = std::any_of(keep_out.begin(), keep_out.end(), [&](const KeepOut& k) {
            return distance(p, k.center) < k.radius;
        });
        if (!blocked) return p;
    }
    return p;
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
    if (hi <= lo) {
        rng();  // keep the stream layout independent of degenerate ranges
        return lo;
    }
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void validate_params(FieldKind kind, const FieldParams& p)
{
    if (!std::isfinite(p.base)) throw ConfigError("must be finite", "environment.params.base");
    if (!(p.amplitude >= 0.0)) throw ConfigError("must be >= 0", "environment.params.amplitude");
    if (p.random_bumps < 0) throw ConfigError("must be >= 0", "environment.params.random_bumps");
    if (p.random_patches < 0) throw ConfigError("must be >= 0", "environment.params.random_patches");
    if (p.random_bumps > 0 && !(p.bump_sigma_min > 0.0 && p.bump_sigma_max >= p.bump_sigma_min))
        throw ConfigError("need 0 < min <= max", "environment.params.bump_sigma_min");
    for (const auto& b : p.bumps)
        if (!(b.sigma > 0.0)) throw ConfigError("bump sigma must be positive", "environment.params.bumps");
    for (const auto& q : p.patches)
        if (!(q.edge_width > 0.0) || q.radius < 0.0)
            throw ConfigError("patch needs radius >= 0 and edge_width > 0", "environment.params.patches");
    if (kind == FieldKind::Smooth && (!p.patches.empty() || p.random_patches > 0))
        throw ConfigError("patches require kind 'heterogeneous'", "environment.params.patches");
    if (p.random_patches > 0 && !(p.patch_edge_width > 0.0))
        throw ConfigError("must be positive", "environment.params.patch_edge_width");
    if (kind == FieldKind::GpPrior) {
        if (!(p.signal_std > 0.0)) throw ConfigError("must be positive", "environment.params.signal_std");
        if (!(p.length_scale > 0.0)) throw ConfigError("must be positive", "environment.params.length_scale");
    }
}

/* Lower Cholesky factor of the unit-variance 1-D RBF kernel on n points,
 * escalating diagonal jitter until the factorization succeeds. */
Eigen::MatrixXd rbf_factor_1d(int n, double spacing, double length_scale)
{
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = (i - j) * spacing;
            k(i, j) = std::exp(-d * d / (2.0 * length_scale * length_scale));
        }
    for (double jitter = 1e-10; jitter <= 1e-4; jitter *= 10.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(kj);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw NumericError("gp_prior field: kernel factorization failed");
}

ScalarGrid draw_gp_prior(const WorkspaceSpec& spec, const FieldParams& p, std::mt19937_64& rng)
{
    // The grid kernel factorizes as Kx (x) Ky, so F = sf * Lx Z Ly^T is an
    // exact draw without factoring the full cell-by-cell covariance.
    const int nx = spec.nx();
    const int ny = spec.ny();
    const Eigen::MatrixXd lx = rbf_factor_1d(nx, spec.resolution, p.length_scale);
    const Eigen::MatrixXd ly = rbf_factor_1d(ny, spec.resolution, p.length_scale);
    Eigen::MatrixXd z(nx, ny);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) z(ix, iy) = normal(rng);
    const Eigen::MatrixXd f = p.signal_std * (lx * z * ly.transpose());

    ScalarGrid grid(spec);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) grid(ix, iy) = p.mean + f(ix, iy);
    return grid;
}

}  // namespace

double grid_lipschitz_bound(const ScalarGrid& grid, double resolution)
{
    static const double octile_ratio = std::sqrt(4.0 - 2.0 * std::sqrt(2.0));
    double worst = 0.0;
    const double diag = std::sqrt(2.0) * resolution;
    for (int iy = 0; iy < grid.ny(); ++iy)
        for (int ix = 0; ix < grid.nx(); ++ix) {
            const double v = grid(ix, iy);
            if (ix + 1 < grid.nx()) worst = std::max(worst, std::abs(grid(ix + 1, iy) - v) / resolution);
            if (iy + 1 < grid.ny()) {
                worst = std::max(worst, std::abs(grid(ix, iy + 1) - v) / resolution);
                if (ix + 1 < grid.nx()) worst = std::max(worst, std::abs(grid(ix + 1, iy + 1) - v) / diag);
                if (ix > 0) worst = std::max(worst, std::abs(grid(ix - 1, iy + 1) - v) / diag);
            }
        }
    return worst * octile_ratio;
}

SlipField generate_field(const WorkspaceSpec& spec, FieldKind kind, const FieldParams& params,
                         std::uint64_t seed)
{
    spec.validate();
    validate_params(kind, params);

    SlipField field;
    field.spec = spec;
    field.kind = kind;
    field.params = params;
    field.seed = seed;

    std::mt19937_64 rng(seed);

    if (kind == FieldKind::GpPrior) {
        field.grid = draw_gp_prior(spec, params, rng);
    } else {
        const Vec2 shift{uniform(rng, -params.jitter.x, params.jitter.x),
                         uniform(rng, -params.jitter.y, params.jitter.y)};

        std::vector<Bump> bumps;
        for (Bump b : params.bumps) {
            b.center = b.center + shift;
            bumps.push_back(b);
        }
        for (int i = 0; i < params.random_bumps; ++i) {
            Bump b;
            b.center = random_position(spec, params.keep_out, rng);
            b.sigma = uniform(rng, params.bump_sigma_min, params.bump_sigma_max);
            b.peak = uniform(rng, params.bump_peak_min, params.bump_peak_max);
            bumps.push_back(b);
        }

        std::vector<Patch> patches;
        if (kind == FieldKind::Heterogeneous) {
            for (Patch q : params.patches) {
                q.a = q.a + shift;
                q.b = q.b + shift;
                patches.push_back(q);
            }
            for (int i = 0; i < params.random_patches; ++i) {
                Patch q;
                q.a = q.b = random_position(spec, params.keep_out, rng);
                q.radius = uniform(rng, params.patch_radius_min, params.patch_radius_max);
                q.peak = uniform(rng, params.patch_peak_min, params.patch_peak_max);
                q.edge_width = params.patch_edge_width;
                patches.push_back(q);
            }
        }

        field.grid = ScalarGrid(spec);
        for (int iy = 0; iy < spec.ny(); ++iy)
            for (int ix = 0; ix < spec.nx(); ++ix) {
                const Vec2 p = spec.cell_center({ix, iy});
                double v = 0.0;
                for (const auto& b : bumps) {
                    const Vec2 d = p - b.center;
                    v += b.peak * std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * b.sigma * b.sigma));
                }
                for (const auto& q : patches)
                    v += q.peak * sigmoid((q.radius - segment_distance(p, q.a, q.b)) / q.edge_width);
                field.grid(ix, iy) = params.base + params.amplitude * v;
            }
    }

    for (auto& v : field.grid.values()) v = std::clamp(v, 0.0, 1.0);
    field.lipschitz_bound = grid_lipschitz_bound(field.grid, spec.resolution);
    return field;
}

double SlipField::value_at(Vec2 p) const
{
    if (!spec.contains(p)) throw DomainError("location outside workspace");
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double fx = std::clamp((p.x - spec.origin.x) / spec.resolution, 0.0, nx - 1.0);
    const double fy = std::clamp((p.y - spec.origin.y) / spec.resolution, 0.0, ny - 1.0);
    const int ix = std::min(static_cast<int>(fx), nx - 2);
    const int iy = std::min(static_cast<int>(fy), ny - 2);
    const double tx = fx - ix;
    const double ty = fy - iy;
    const double bottom = (1.0 - tx) * grid(ix, iy) + tx * grid(ix + 1, iy);
    const double top = (1.0 - tx) * grid(ix, iy + 1) + tx * grid(ix + 1, iy + 1);
    return (1.0 - ty) * bottom + ty * top;
}

NoisySample sample_truth(const SlipField& field, Vec2 location, double noise_std, std::mt19937_64& rng)
{
    if (!(noise_std >= 0.0)) throw DomainError("noise_std must be >= 0");
    const double truth = field.value_at(location);
    // A fresh distribution per draw keeps the stream free of cached state.
    std::normal_distribution<double> normal(0.0, 1.0);
    const double eps = normal(rng);
    return {location, truth + noise_std * eps, noise_std};
}

Mask true_safe_mask(const SlipField& field, double h)
{
    Mask mask(field.grid.nx(), field.grid.ny(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = field.grid[i] <= h ? 1 : 0;
    return mask;
}

}  // namespace psane::terrain
