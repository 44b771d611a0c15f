#pragma once

// Exact Gaussian-process regression with an RBF kernel over planar
// locations.

#include "psane/core.hpp"
#include "psane/terrain.hpp"

#include <Eigen/Core>

#include <map>
#include <span>
#include <utility>
#include <vector>

namespace psane::gp {

struct KernelParams {
    double signal_std = 0.25;   // sigma_f, slip units
    double length_scale = 1.5;  // meters
    double noise_std = 0.02;    // sigma_noise, slip units

    /* Throws ConfigError on sigma_f <= 0, length_scale <= 0 or noise < 0. */
    void validate() const;
};

/* Diagonal jitter always added to the kernel matrix; escalated tenfold up to
 * kMaxJitter when the factorization fails. */
inline constexpr double kJitterFloor = 1e-10;
inline constexpr double kMaxJitter = 1e-6;

double kernel(Vec2 a, Vec2 b, const KernelParams& params);

struct Prediction {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct GridPrediction {
    ScalarGrid mean;
    ScalarGrid stddev;
};

class GpModel {
public:
    /* Posterior after conditioning the constant-mean prior on `samples`.
     * Samples at identical locations are pooled into one observation with
     * the averaged value and noise variance sigma^2 / k, which leaves the
     * posterior unchanged. Throws DataError on non-finite samples and
     * NumericError if factorization fails at kMaxJitter. */
    static GpModel fit(std::span<const terrain::NoisySample> samples, const KernelParams& params,
                       double prior_mean);

    Prediction predict(std::span<const Vec2> queries) const;
    /* Posterior at every cell center of the workspace. */
    GridPrediction predict_grid(const WorkspaceSpec& spec) const;

    const KernelParams& params() const { return params_; }
    double prior_mean() const { return prior_mean_; }
    std::size_t sample_count() const { return sample_count_; }
    /* Number of distinct observation locations after pooling. */
    std::size_t support_size() const { return static_cast<std::size_t>(locations_.rows()); }
    double jitter() const { return jitter_; }

private:
    void predict_block(const Eigen::MatrixX2d& queries, double* mean, double* stddev) const;

    KernelParams params_;
    double prior_mean_ = 0.5;
    std::size_t sample_count_ = 0;
    double jitter_ = kJitterFloor;
    Eigen::MatrixX2d locations_;
    Eigen::MatrixXd factor_;  // lower Cholesky factor of K + diag(noise) + jitter I
    Eigen::VectorXd alpha_;   // (K + ...)^{-1} (y - prior_mean)
};

/* Posterior at the cell centers of a workspace, kept current while the
 * sample sequence grows. A sample at a new location extends the Cholesky
 * factor by one row in O(n^2 + n m); a repeated location, or an extension
 * that loses positive definiteness, triggers a full refit. Results match
 * GpModel::fit followed by predict_grid up to rounding. */
class GridPosterior {
public:
    GridPosterior(const WorkspaceSpec& spec, const KernelParams& params, double prior_mean);

    /* `samples` must start with every sample passed on earlier calls. */
    const GridPrediction& update(std::span<const terrain::NoisySample> samples);

    const GridPrediction& prediction() const { return pred_; }
    std::size_t support_size() const { return pooled_.size(); }
    std::size_t refits() const { return refits_; }

private:
    struct Pooled {
        Vec2 location;
        double sum = 0.0;
        int count = 0;
    };

    void refit();
    bool extend(Vec2 location, double value);
    void publish();

    KernelParams params_;
    double prior_mean_;
    Eigen::MatrixX2d cells_;
    std::vector<Pooled> pooled_;
    std::map<std::pair<double, double>, std::size_t> seen_;
    std::size_t consumed_ = 0;
    std::size_t refits_ = 0;
    double jitter_ = kJitterFloor;
    Eigen::MatrixXd factor_;     // n x n lower Cholesky factor
    Eigen::VectorXd whitened_;   // L^{-1} (y - prior_mean)
    Eigen::MatrixXd cross_;      // L^{-1} K(X, cells), n x m
    Eigen::VectorXd mean_;       // posterior mean minus prior, per cell
    Eigen::VectorXd explained_;  // prior variance removed, per cell
    GridPrediction pred_;
};

}  // namespace psane::gp
