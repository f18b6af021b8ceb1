#include "clogb/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace clogb {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double sigmoid_deriv(double x) {
    // l(x)(1 - l(x)) = l(x) l(-x); the product form keeps full precision in both tails.
    return sigmoid(x) * sigmoid(-x);
}

double sigmoid_second_deriv(double x) {
    return sigmoid_deriv(x) * (sigmoid(-x) - sigmoid(x));
}

double mahalanobis_norm(const Vector& v, const Matrix& m) {
    if (m.rows() != v.size() || m.cols() != v.size()) {
        throw std::invalid_argument("mahalanobis_norm: dimension mismatch");
    }
    const double q = v.dot(m * v);
    if (q < 0.0) {
        if (q >= -1e-12) return 0.0;
        throw std::domain_error("mahalanobis_norm: matrix is not positive semidefinite");
    }
    return std::sqrt(q);
}

Vector psd_solve(const Matrix& m, const Vector& v) {
    if (m.rows() != v.size() || m.cols() != v.size()) {
        throw std::invalid_argument("psd_solve: dimension mismatch");
    }
    return PsdFactor(m).solve(v);
}

PsdFactor::PsdFactor(const Matrix& m) : llt_(m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("PsdFactor: matrix is not square");
    }
    if (llt_.info() != Eigen::Success) {
        throw std::runtime_error("PsdFactor: matrix is not numerically positive definite");
    }
}

Vector PsdFactor::solve(const Vector& v) const { return llt_.solve(v); }

double PsdFactor::inverse_norm_sq(const Vector& v) const {
    // ||v||^2_{M^{-1}} = ||L^{-1} v||^2 with M = L L'.
    const Vector w = llt_.matrixL().solve(v);
    return w.squaredNorm();
}

double PsdFactor::inverse_norm(const Vector& v) const { return std::sqrt(inverse_norm_sq(v)); }

double PsdFactor::log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace clogb
