#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace clogb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-round feature map: row i holds the feature vector of base arm i.
using FeatureMap = Eigen::MatrixXd;

using Rng = std::mt19937_64;

// Logistic link and its first two derivatives. Stable for |x| up to ~700.
double sigmoid(double x);
double sigmoid_deriv(double x);
double sigmoid_second_deriv(double x);

/// sqrt(v' m v). Quadratic forms in [-1e-12, 0) are treated as 0.
/// Throws std::invalid_argument on a dimension mismatch.
double mahalanobis_norm(const Vector& v, const Matrix& m);

/// Solves m x = v through a Cholesky factorization.
/// Throws std::runtime_error when m is not numerically positive definite.
Vector psd_solve(const Matrix& m, const Vector& v);

/// Cholesky factorization of a symmetric positive-definite matrix, reused
/// for many ||x||_{m^{-1}} evaluations against the same matrix.
class PsdFactor {
public:
    explicit PsdFactor(const Matrix& m);

    Eigen::Index dim() const { return llt_.rows(); }
    Vector solve(const Vector& v) const;
    /// ||v||_{m^{-1}}
    double inverse_norm(const Vector& v) const;
    /// ||v||^2_{m^{-1}}
    double inverse_norm_sq(const Vector& v) const;
    double log_det() const;

private:
    Eigen::LLT<Matrix> llt_;
};

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// SplitMix64 finalizer; derives independent stream seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace clogb
