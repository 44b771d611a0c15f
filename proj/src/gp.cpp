#include "psane/gp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace psane::gp {

void KernelParams::validate() const
{
    if (!(signal_std > 0.0) || !std::isfinite(signal_std)) throw ConfigError("must be positive", "gp.signal_std");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw ConfigError("must be positive", "gp.length_scale");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ConfigError("must be >= 0", "gp.noise_std");
}

double kernel(Vec2 a, Vec2 b, const KernelParams& params)
{
    const Vec2 d = a - b;
    const double sf2 = params.signal_std * params.signal_std;
    return sf2 * std::exp(-(d.x * d.x + d.y * d.y) / (2.0 * params.length_scale * params.length_scale));
}

namespace {

struct Pooled {
    Vec2 location;
    double sum = 0.0;
    int count = 0;
};

Eigen::MatrixXd gram(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b, const KernelParams& params)
{
    const double sf2 = params.signal_std * params.signal_std;
    const double inv = 1.0 / (2.0 * params.length_scale * params.length_scale);
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double dx = a(i, 0) - b(j, 0);
            const double dy = a(i, 1) - b(j, 1);
            k(i, j) = sf2 * std::exp(-(dx * dx + dy * dy) * inv);
        }
    return k;
}

}  // namespace

GpModel GpModel::fit(std::span<const terrain::NoisySample> samples, const KernelParams& params, double prior_mean)
{
    params.validate();
    if (!std::isfinite(prior_mean)) throw ConfigError("must be finite", "gp.prior_mean");

    // Pool exact duplicates in first-seen order.
    std::vector<Pooled> pooled;
    std::map<std::pair<double, double>, std::size_t> seen;
    for (const auto& s : samples) {
        if (!std::isfinite(s.value) || !std::isfinite(s.location.x) || !std::isfinite(s.location.y))
            throw DataError("non-finite sample");
        auto [it, inserted] = seen.try_emplace({s.location.x, s.location.y}, pooled.size());
        if (inserted) pooled.push_back({s.location, 0.0, 0});
        pooled[it->second].sum += s.value;
        pooled[it->second].count += 1;
    }

    GpModel model;
    model.params_ = params;
    model.prior_mean_ = prior_mean;
    model.sample_count_ = samples.size();

    const auto n = static_cast<Eigen::Index>(pooled.size());
    model.locations_.resize(n, 2);
    Eigen::VectorXd residual(n);
    Eigen::VectorXd noise(n);
    const double noise_var = params.noise_std * params.noise_std;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pooled[static_cast<std::size_t>(i)];
        model.locations_(i, 0) = p.location.x;
        model.locations_(i, 1) = p.location.y;
        residual(i) = p.sum / p.count - prior_mean;
        noise(i) = noise_var / p.count;
    }
    if (n == 0) {
        model.factor_.resize(0, 0);
        model.alpha_.resize(0);
        return model;
    }

    const Eigen::MatrixXd k = gram(model.locations_, model.locations_, params);
    for (double jitter = kJitterFloor; jitter <= kMaxJitter * 1.000001; jitter *= 10.0) {
        Eigen::MatrixXd kn = k;
        kn.diagonal() += noise;
        kn.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(kn);
        if (llt.info() != Eigen::Success) continue;
        model.jitter_ = jitter;
        model.factor_ = llt.matrixL();
        model.alpha_ = llt.solve(residual);
        return model;
    }
    throw NumericError("GP kernel matrix not positive definite at maximum jitter");
}

void GpModel::predict_block(const Eigen::MatrixX2d& queries, double* mean, double* stddev) const
{
    const double sf2 = params_.signal_std * params_.signal_std;
    const Eigen::Index m = queries.rows();
    if (locations_.rows() == 0) {
        for (Eigen::Index j = 0; j < m; ++j) {
            mean[j] = prior_mean_;
            stddev[j] = params_.signal_std;
        }
        return;
    }
    const Eigen::MatrixXd kstar = gram(locations_, queries, params_);  // n x m
    const Eigen::VectorXd mu = kstar.transpose() * alpha_;
    const Eigen::MatrixXd v = factor_.triangularView<Eigen::Lower>().solve(kstar);
    const Eigen::VectorXd explained = v.colwise().squaredNorm().transpose();
    for (Eigen::Index j = 0; j < m; ++j) {
        mean[j] = prior_mean_ + mu(j);
        stddev[j] = std::sqrt(std::max(0.0, sf2 - explained(j)));
    }
}

Prediction GpModel::predict(std::span<const Vec2> queries) const
{
    Eigen::MatrixX2d q(static_cast<Eigen::Index>(queries.size()), 2);
    for (std::size_t i = 0; i < queries.size(); ++i) {
        q(static_cast<Eigen::Index>(i), 0) = queries[i].x;
        q(static_cast<Eigen::Index>(i), 1) = queries[i].y;
    }
    Prediction out;
    out.mean.resize(queries.size());
    out.stddev.resize(queries.size());
    predict_block(q, out.mean.data(), out.stddev.data());
    return out;
}

GridPrediction GpModel::predict_grid(const WorkspaceSpec& spec) const
{
    const std::size_t cells = spec.cell_count();
    Eigen::MatrixX2d q(static_cast<Eigen::Index>(cells), 2);
    for (std::size_t i = 0; i < cells; ++i) {
        const Vec2 c = spec.cell_center(spec.unlinear(i));
        q(static_cast<Eigen::Index>(i), 0) = c.x;
        q(static_cast<Eigen::Index>(i), 1) = c.y;
    }
    GridPrediction out{ScalarGrid(spec), ScalarGrid(spec)};
    predict_block(q, out.mean.values().data(), out.stddev.values().data());
    return out;
}

GridPosterior::GridPosterior(const WorkspaceSpec& spec, const KernelParams& params, double prior_mean)
    : params_(params), prior_mean_(prior_mean), pred_{ScalarGrid(spec), ScalarGrid(spec)}
{
    params.validate();
    if (!std::isfinite(prior_mean)) throw ConfigError("must be finite", "gp.prior_mean");
    const auto m = static_cast<Eigen::Index>(spec.cell_count());
    cells_.resize(m, 2);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vec2 c = spec.cell_center(spec.unlinear(static_cast<std::size_t>(i)));
        cells_(i, 0) = c.x;
        cells_(i, 1) = c.y;
    }
    factor_.resize(0, 0);
    whitened_.resize(0);
    cross_.resize(0, m);
    mean_ = Eigen::VectorXd::Zero(m);
    explained_ = Eigen::VectorXd::Zero(m);
    publish();
}

const GridPrediction& GridPosterior::update(std::span<const terrain::NoisySample> samples)
{
    if (samples.size() < consumed_) throw DomainError("sample sequence shrank between updates");
    bool stale = false;
    for (std::size_t i = consumed_; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (!std::isfinite(s.value) || !std::isfinite(s.location.x) || !std::isfinite(s.location.y))
            throw DataError("non-finite sample");
        auto [it, inserted] = seen_.try_emplace({s.location.x, s.location.y}, pooled_.size());
        if (inserted) pooled_.push_back({s.location, 0.0, 0});
        pooled_[it->second].sum += s.value;
        pooled_[it->second].count += 1;
        if (!inserted || (!stale && !extend(s.location, s.value))) stale = true;
    }
    consumed_ = samples.size();
    if (stale) refit();
    publish();
    return pred_;
}

bool GridPosterior::extend(Vec2 location, double value)
{
    const Eigen::Index n = factor_.rows();
    Eigen::MatrixX2d x(1, 2);
    x(0, 0) = location.x;
    x(0, 1) = location.y;
    Eigen::MatrixX2d support(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        support(i, 0) = pooled_[static_cast<std::size_t>(i)].location.x;
        support(i, 1) = pooled_[static_cast<std::size_t>(i)].location.y;
    }
    const Eigen::VectorXd k = gram(support, x, params_).col(0);
    const Eigen::VectorXd l = factor_.triangularView<Eigen::Lower>().solve(k);
    const double sf2 = params_.signal_std * params_.signal_std;
    const double d2 = sf2 + params_.noise_std * params_.noise_std + jitter_ - l.squaredNorm();
    if (!(d2 > 0.0) || !std::isfinite(d2)) return false;
    const double d = std::sqrt(d2);

    factor_.conservativeResize(n + 1, n + 1);
    factor_.row(n).head(n) = l.transpose();
    factor_.col(n).head(n).setZero();
    factor_(n, n) = d;

    const double w = (value - prior_mean_ - l.dot(whitened_)) / d;
    whitened_.conservativeResize(n + 1);
    whitened_(n) = w;

    const Eigen::RowVectorXd row = (gram(x, cells_, params_) - l.transpose() * cross_) / d;
    cross_.conservativeResize(n + 1, Eigen::NoChange);
    cross_.row(n) = row;
    mean_ += w * row.transpose();
    explained_ += row.transpose().cwiseAbs2();
    return true;
}

void GridPosterior::refit()
{
    ++refits_;
    const auto n = static_cast<Eigen::Index>(pooled_.size());
    Eigen::MatrixX2d support(n, 2);
    Eigen::VectorXd residual(n);
    Eigen::VectorXd noise(n);
    const double noise_var = params_.noise_std * params_.noise_std;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = pooled_[static_cast<std::size_t>(i)];
        support(i, 0) = p.location.x;
        support(i, 1) = p.location.y;
        residual(i) = p.sum / p.count - prior_mean_;
        noise(i) = noise_var / p.count;
    }
    const Eigen::MatrixXd k = gram(support, support, params_);
    for (double jitter = kJitterFloor; jitter <= kMaxJitter * 1.000001; jitter *= 10.0) {
        Eigen::MatrixXd kn = k;
        kn.diagonal() += noise;
        kn.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(kn);
        if (llt.info() != Eigen::Success) continue;
        jitter_ = jitter;
        factor_ = llt.matrixL();
        const auto lower = factor_.triangularView<Eigen::Lower>();
        whitened_ = lower.solve(residual);
        cross_ = lower.solve(gram(support, cells_, params_));
        mean_ = cross_.transpose() * whitened_;
        explained_ = cross_.colwise().squaredNorm().transpose();
        return;
    }
    throw NumericError("GP kernel matrix not positive definite at maximum jitter");
}

void GridPosterior::publish()
{
    const double sf2 = params_.signal_std * params_.signal_std;
    auto& mean = pred_.mean.values();
    auto& stddev = pred_.stddev.values();
    for (std::size_t j = 0; j < mean.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        mean[j] = prior_mean_ + mean_(i);
        stddev[j] = std::sqrt(std::max(0.0, sf2 - explained_(i)));
    }
}

}  // namespace psane::gp
