#pragma once

#include "clogb/numeric.hpp"

#include <optional>
#include <span>
#include <vector>

namespace clogb {

/// History of (feature, binary outcome) pairs from triggered arms, grouped
/// by round. Keeps sum_i X_i phi_i and sum_i phi_i phi_i' up to date.
class ObservationLog {
public:
    explicit ObservationLog(Eigen::Index dim);

    /// Opens a new (possibly empty) round.
    void begin_round();
    /// Appends one observation to the current round; opens a round if none is open.
    /// Throws std::invalid_argument if ||feature||_2 > 1 + 1e-9 or dimensions differ.
    void add(const Vector& feature, bool outcome);

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return outcomes_.size(); }
    bool empty() const { return outcomes_.empty(); }
    std::size_t rounds() const { return round_starts_.size(); }
    /// Number of observations recorded in round r.
    std::size_t round_size(std::size_t r) const;

    /// Row-major n x d view of every stored feature.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    features() const;
    Eigen::Map<const Vector> outcomes() const;

    const Vector& outcome_weighted_sum() const { return sum_x_phi_; }
    const Matrix& gram() const { return gram_; }

private:
    Eigen::Index dim_;
    std::vector<double> feature_data_;
    std::vector<double> outcomes_;
    std::vector<std::size_t> round_starts_;
    Vector sum_x_phi_;
    Matrix gram_;
};

/// lambda_t = d log(4 (1 + t K) / delta).
struct RegularizerSchedule {
    int d = 1;
    int K = 1;
    double delta = 1.0;

    double at(long t) const;
};

/// Cached per-round estimator quantities shared by the UCB algorithms.
struct EstimatorState {
    Vector theta_hat;
    double lambda_t = 1.0;
    Matrix covariance_v;
    Matrix hessian_at_hat;
    double kappa = 4.0;
};

double log_loss(const Vector& theta, const ObservationLog& log, double lambda_t);
Vector grad_log_loss(const Vector& theta, const ObservationLog& log, double lambda_t);
/// g(theta) = sum l(theta' phi) phi + lambda_t theta
Vector g_map(const Vector& theta, const ObservationLog& log, double lambda_t);
/// H(theta) = sum l'(theta' phi) phi phi' + lambda_t I
Matrix hessian(const Vector& theta, const ObservationLog& log, double lambda_t);
/// V = sum phi phi' + kappa lambda_t I
Matrix covariance(const ObservationLog& log, double kappa, double lambda_t);

struct Ellipsoid {
    Vector center;
    Matrix shape;
    double radius = 0.0;

    /// ||x - center||_shape
    double distance(const Vector& x) const;
    bool contains(const Vector& x, double slack = 0.0) const;
};

struct SolverOptions {
    double tol = 1e-6;
    int max_iter = 10000;
};

struct FitResult {
    Vector theta;
    int iterations = 0;
    /// Gradient norm (or projected-gradient stationarity for constrained fits) at theta.
    double stationarity = 0.0;
    bool converged = false;
};

/// Unconstrained MLE: gradient descent with Armijo backtracking.
/// Throws std::runtime_error if the loss becomes non-finite.
FitResult fit_mle(const ObservationLog& log, double lambda_t, const SolverOptions& opts,
                  const std::optional<Vector>& warm_start = std::nullopt);

/// MLE restricted to an ellipsoid: projected gradient descent with Armijo
/// backtracking along the projection arc.
FitResult fit_mle_constrained(const ObservationLog& log, double lambda_t, const Ellipsoid& region,
                              const SolverOptions& opts,
                              const std::optional<Vector>& warm_start = std::nullopt);

/// Euclidean projection of point onto {x : ||x - center||_shape <= radius}.
Vector project_to_ellipsoid(const Vector& point, const Vector& center, const Matrix& shape,
                            double radius);

}  // namespace clogb
