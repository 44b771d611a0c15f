#pragma once

// Synthetic ground-truth slip-ratio fields and the noisy point measurements
// the robot gathers while walking over them.

#include "psane/core.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace psane::terrain {

enum class FieldKind { Smooth, Heterogeneous, GpPrior };

std::string to_string(FieldKind kind);
/* Throws ConfigError for unknown names. */
FieldKind field_kind_from_string(const std::string& name);

/* Gaussian bump: peak * exp(-|p - center|^2 / (2 sigma^2)). */
struct Bump {
    Vec2 center;
    double sigma = 1.0;
    double peak = 0.5;
};

/* Capsule-shaped patch around the segment [a, b] (a disk when a == b) with
 * a sigmoid edge: peak * sigmoid((radius - dist) / edge_width). */
struct Patch {
    Vec2 a;
    Vec2 b;
    double radius = 1.0;
    double edge_width = 0.3;
    double peak = 0.8;
};

/* Circle that randomly placed features keep their centers out of. */
struct KeepOut {
    Vec2 center;
    double radius = 0.0;
};

struct FieldParams {
    double base = 0.15;
    /* Multiplies every feature peak; 0 yields the constant `base` field. */
    double amplitude = 1.0;

    std::vector<Bump> bumps;
    int random_bumps = 0;
    double bump_sigma_min = 1.0;
    double bump_sigma_max = 2.0;
    double bump_peak_min = 0.05;
    double bump_peak_max = 0.3;

    /* Heterogeneous fields only. */
    std::vector<Patch> patches;
    int random_patches = 0;
    double patch_radius_min = 0.5;
    double patch_radius_max = 1.2;
    double patch_peak_min = 0.5;
    double patch_peak_max = 0.9;
    double patch_edge_width = 0.3;

    /* Seeded uniform displacement applied to the explicit bumps and patches,
     * drawn once per field from [-jitter, jitter] per axis. */
    Vec2 jitter{0.0, 0.0};
    std::vector<KeepOut> keep_out;

    /* GP-prior draws. */
    double mean = 0.5;
    double signal_std = 0.2;
    double length_scale = 2.0;
};

struct SlipField {
    WorkspaceSpec spec;
    ScalarGrid grid;  // slip ratio per cell, clamped to [0,1]
    FieldKind kind = FieldKind::Smooth;
    FieldParams params;
    std::uint64_t seed = 0;
    /* Bounds |f(a) - f(b)| / |a - b| over every pair of cell centers. */
    double lipschitz_bound = 0.0;

    /* Bilinear interpolation between cell centers; positions between the
     * outermost centers and the workspace edge take the edge values.
     * Throws DomainError outside the workspace. */
    double value_at(Vec2 p) const;
};

struct NoisySample {
    Vec2 location;
    double value = 0.0;
    double noise_std = 0.0;
};

SlipField generate_field(const WorkspaceSpec& spec, FieldKind kind, const FieldParams& params,
                         std::uint64_t seed);

NoisySample sample_truth(const SlipField& field, Vec2 location, double noise_std, std::mt19937_64& rng);

/* Cell is true iff its stored slip is <= h. */
Mask true_safe_mask(const SlipField& field, double h);

/* Largest |f(a) - f(b)| / |a - b| over 8-neighbour cell pairs, scaled by the
 * worst ratio of octile to Euclidean distance so that it bounds every pair
 * of cell centers. */
double grid_lipschitz_bound(const ScalarGrid& grid, double resolution);

}  // namespace psane::terrain
