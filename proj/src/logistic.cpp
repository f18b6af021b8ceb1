#include "clogb/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace clogb {

ObservationLog::ObservationLog(Eigen::Index dim)
    : dim_(dim), sum_x_phi_(Vector::Zero(dim)), gram_(Matrix::Zero(dim, dim)) {
    if (dim < 1) throw std::invalid_argument("ObservationLog: dimension must be >= 1");
}

void ObservationLog::begin_round() { round_starts_.push_back(outcomes_.size()); }

void ObservationLog::add(const Vector& feature, bool outcome) {
    if (feature.size() != dim_) throw std::invalid_argument("ObservationLog: dimension mismatch");
    if (feature.squaredNorm() > 1.0 + 1e-9) {
        throw std::invalid_argument("ObservationLog: feature norm exceeds 1");
    }
    if (round_starts_.empty()) begin_round();
    feature_data_.insert(feature_data_.end(), feature.data(), feature.data() + dim_);
    outcomes_.push_back(outcome ? 1.0 : 0.0);
    if (outcome) sum_x_phi_ += feature;
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(feature);
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
}

std::size_t ObservationLog::round_size(std::size_t r) const {
    const std::size_t end = r + 1 < round_starts_.size() ? round_starts_[r + 1] : outcomes_.size();
    return end - round_starts_.at(r);
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
ObservationLog::features() const {
    return {feature_data_.data(), static_cast<Eigen::Index>(outcomes_.size()), dim_};
}

Eigen::Map<const Vector> ObservationLog::outcomes() const {
    return {outcomes_.data(), static_cast<Eigen::Index>(outcomes_.size())};
}

double RegularizerSchedule::at(long t) const {
    return static_cast<double>(d) *
           std::log(4.0 * (1.0 + static_cast<double>(t) * static_cast<double>(K)) / delta);
}

namespace {

// log(1 + e^z)
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_dim(const Vector& theta, const ObservationLog& log) {
    if (theta.size() != log.dim()) throw std::invalid_argument("theta/log dimension mismatch");
}

// Loss from precomputed linear predictors z = F theta.
double loss_from_predictors(const Vector& z, const ObservationLog& log, const Vector& theta,
                            double lambda_t) {
    const auto x = log.outcomes();
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z[i]) - x[i] * z[i];
    return total + 0.5 * lambda_t * theta.squaredNorm();
}

Vector gradient_from_predictors(const Vector& z, const ObservationLog& log, const Vector& theta,
                                double lambda_t) {
    Vector weights(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) weights[i] = sigmoid(z[i]);
    Vector grad = lambda_t * theta - log.outcome_weighted_sum();
    if (z.size() > 0) grad.noalias() += log.features().transpose() * weights;
    return grad;
}

}  // namespace

double log_loss(const Vector& theta, const ObservationLog& log, double lambda_t) {
    check_dim(theta, log);
    const Vector z = log.features() * theta;
    return loss_from_predictors(z, log, theta, lambda_t);
}

Vector grad_log_loss(const Vector& theta, const ObservationLog& log, double lambda_t) {
    check_dim(theta, log);
    const Vector z = log.features() * theta;
    return gradient_from_predictors(z, log, theta, lambda_t);
}

Vector g_map(const Vector& theta, const ObservationLog& log, double lambda_t) {
    return grad_log_loss(theta, log, lambda_t) + log.outcome_weighted_sum();
}

Matrix hessian(const Vector& theta, const ObservationLog& log, double lambda_t) {
    check_dim(theta, log);
    const Eigen::Index d = log.dim();
    Matrix h = lambda_t * Matrix::Identity(d, d);
    if (log.empty()) return h;
    const auto f = log.features();
    const Vector z = f * theta;
    Vector root_w(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) root_w[i] = std::sqrt(sigmoid_deriv(z[i]));
    const Matrix weighted = root_w.asDiagonal() * f;
    h.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose());
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    return h;
}

Matrix covariance(const ObservationLog& log, double kappa, double lambda_t) {
    const Eigen::Index d = log.dim();
    return log.gram() + kappa * lambda_t * Matrix::Identity(d, d);
}

double Ellipsoid::distance(const Vector& x) const { return mahalanobis_norm(x - center, shape); }

bool Ellipsoid::contains(const Vector& x, double slack) const {
    return distance(x) <= radius + slack;
}

Vector project_to_ellipsoid(const Vector& point, const Vector& center, const Matrix& shape,
                            double radius) {
    if (radius <= 0.0) return center;
    const Vector offset = point - center;
    if (mahalanobis_norm(offset, shape) <= radius) return point;

    // x - c = (I + mu A)^{-1} (p - c); the constraint value decreases in mu.
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(shape);
    const Vector lam = eig.eigenvalues().cwiseMax(0.0);
    const Vector y = eig.eigenvectors().transpose() * offset;
    const double r2 = radius * radius;
    auto constraint = [&](double mu) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double denom = 1.0 + mu * lam[i];
            s += lam[i] * y[i] * y[i] / (denom * denom);
        }
        return s;
    };

    double lo = 0.0;
    double hi = 1.0;
    while (constraint(hi) > r2 && hi < 1e300) hi *= 2.0;
    for (int it = 0; it < 400 && hi - lo > 1e-10 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (constraint(mid) > r2 ? lo : hi) = mid;
    }
    Vector z(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) z[i] = y[i] / (1.0 + hi * lam[i]);
    Vector result = center + eig.eigenvectors() * z;
    const double dist = mahalanobis_norm(result - center, shape);
    if (dist > radius) result = center + (radius / dist) * (result - center);
    return result;
}

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr double kShrink = 0.5;

double smoothness_bound(const ObservationLog& log, double lambda_t) {
    return lambda_t + 0.25 * log.gram().trace();
}

void require_finite(double value) {
    if (!std::isfinite(value)) throw std::runtime_error("fit_mle: non-finite loss encountered");
}

}  // namespace

FitResult fit_mle(const ObservationLog& log, double lambda_t, const SolverOptions& opts,
                  const std::optional<Vector>& warm_start) {
    if (opts.tol <= 0.0) throw std::invalid_argument("fit_mle: tol must be positive");
    if (lambda_t <= 0.0) throw std::invalid_argument("fit_mle: lambda_t must be positive");
    const auto f = log.features();

    FitResult result;
    result.theta = warm_start.value_or(Vector::Zero(log.dim()));
    check_dim(result.theta, log);
    Vector z = f * result.theta;
    double loss = loss_from_predictors(z, log, result.theta, lambda_t);
    require_finite(loss);

    const double max_step = 1.0 / lambda_t;
    // 1/smoothness always decreases the loss; used when the loss values can
    // no longer resolve the Armijo decrease.
    const double safe_step = 1.0 / smoothness_bound(log, lambda_t);
    double step = safe_step;
    for (result.iterations = 0;; ++result.iterations) {
        const Vector grad = gradient_from_predictors(z, log, result.theta, lambda_t);
        result.stationarity = grad.norm();
        if (result.stationarity <= opts.tol) {
            result.converged = true;
            break;
        }
        if (result.iterations >= opts.max_iter) break;

        const Vector dz = f * grad;
        const double grad_sq = grad.squaredNorm();
        step = std::min(2.0 * step, max_step);
        Vector candidate;
        Vector candidate_z;
        double candidate_loss = 0.0;
        bool accepted = false;
        for (;;) {
            candidate = result.theta - step * grad;
            candidate_z = z - step * dz;
            candidate_loss = loss_from_predictors(candidate_z, log, candidate, lambda_t);
            require_finite(candidate_loss);
            if (candidate_loss <= loss - kArmijoSlope * step * grad_sq) {
                accepted = true;
                break;
            }
            if (step <= safe_step) break;
            step = std::max(step * kShrink, safe_step);
        }
        if (!accepted) {
            // Below loss resolution: keep the safe step only if it shrinks the gradient.
            const Vector next = gradient_from_predictors(candidate_z, log, candidate, lambda_t);
            if (next.norm() >= result.stationarity) break;
        }
        result.theta = std::move(candidate);
        z = std::move(candidate_z);
        loss = candidate_loss;
    }
    return result;
}

FitResult fit_mle_constrained(const ObservationLog& log, double lambda_t, const Ellipsoid& region,
                              const SolverOptions& opts, const std::optional<Vector>& warm_start) {
    if (opts.tol <= 0.0) throw std::invalid_argument("fit_mle_constrained: tol must be positive");
    if (lambda_t <= 0.0) throw std::invalid_argument("fit_mle_constrained: lambda_t must be positive");
    auto project = [&](const Vector& p) {
        return project_to_ellipsoid(p, region.center, region.shape, region.radius);
    };

    FitResult result;
    result.theta = project(warm_start.value_or(region.center));
    check_dim(result.theta, log);
    if (region.radius <= 0.0) {
        result.converged = true;
        return result;
    }
    const auto f = log.features();
    Vector z = f * result.theta;
    double loss = loss_from_predictors(z, log, result.theta, lambda_t);
    require_finite(loss);

    const double max_step = 1.0 / lambda_t;
    double step = 1.0 / smoothness_bound(log, lambda_t);
    for (result.iterations = 0;; ++result.iterations) {
        const Vector grad = gradient_from_predictors(z, log, result.theta, lambda_t);
        result.stationarity = (result.theta - project(result.theta - grad)).norm();
        if (result.stationarity <= opts.tol) {
            result.converged = true;
            break;
        }
        if (result.iterations >= opts.max_iter) break;

        step = std::min(2.0 * step, max_step);
        Vector candidate;
        Vector candidate_z;
        double candidate_loss = 0.0;
        for (;;) {
            candidate = project(result.theta - step * grad);
            candidate_z = f * candidate;
            candidate_loss = loss_from_predictors(candidate_z, log, candidate, lambda_t);
            require_finite(candidate_loss);
            if (candidate_loss <= loss + kArmijoSlope * grad.dot(candidate - result.theta)) break;
            step *= kShrink;
            if (step < 1e-300) break;
        }
        if (candidate_loss > loss) break;
        result.theta = std::move(candidate);
        z = std::move(candidate_z);
        loss = candidate_loss;
    }
    return result;
}

}  // namespace clogb
