#include "clogb/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace clogb {

void RadiusParams::validate() const {
    if (!(L > 0.0)) throw std::invalid_argument("RadiusParams: L must be positive");
    if (d < 1 || K < 1) throw std::invalid_argument("RadiusParams: d and K must be >= 1");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("RadiusParams: delta not in (0,1]");
    if (!(kappa >= 4.0)) throw std::invalid_argument("RadiusParams: kappa must be >= 4");
}

double RadiusParams::log_term(long t) const {
    if (t < 1) throw std::invalid_argument("confidence radius: t must be >= 1");
    return std::log(4.0 * (1.0 + static_cast<double>(t) * K) / delta);
}

double radius_gamma(long t, const RadiusParams& p) {
    return (p.L + 1.5) * std::sqrt(p.d * p.log_term(t));
}

double radius_beta(long t, const RadiusParams& p) {
    return (p.L * p.L + 4.0 * p.L + 4.75) * std::sqrt(p.kappa * p.d * p.log_term(t));
}

double radius_sigma(long t, const RadiusParams& p) {
    return (2.0 * p.L + 1.0) * (2.0 * p.L + 3.0) * std::sqrt(p.d * p.log_term(t));
}

double radius_nu(long t, const RadiusParams& p) {
    return 3.0 * (p.L + 1.5) * std::sqrt(p.d * p.log_term(t));
}

double kappa_bound(double L) { return 4.0 * std::exp(L); }

double kappa_exact(double L, double max_feature_norm) {
    return std::max(4.0, 1.0 / sigmoid_deriv(L * max_feature_norm));
}

double bonus_agnostic(const Vector& feature, const PsdFactor& v_factor, double beta, double scale) {
    return scale * beta * v_factor.inverse_norm(feature);
}

double bonus_agnostic(const Vector& feature, const Matrix& v_matrix, double beta, double scale) {
    return bonus_agnostic(feature, PsdFactor(v_matrix), beta, scale);
}

namespace {

double second_order_term(const Vector& feature, const PsdFactor& v_factor, double radius,
                         double kappa) {
    return 0.125 * kappa * radius * radius * v_factor.inverse_norm_sq(feature);
}

}  // namespace

double bonus_adaptive(const Vector& feature, const Vector& theta_hat, const PsdFactor& h_factor,
                      const PsdFactor& v_factor, double sigma, double kappa) {
    return sigma * sigmoid_deriv(feature.dot(theta_hat)) * h_factor.inverse_norm(feature) +
           second_order_term(feature, v_factor, sigma, kappa);
}

double bonus_adaptive(const Vector& feature, const Vector& theta_hat, const Matrix& hessian_at_hat,
                      const Matrix& v_matrix, double sigma, double kappa) {
    return bonus_adaptive(feature, theta_hat, PsdFactor(hessian_at_hat), PsdFactor(v_matrix), sigma,
                          kappa);
}

double bonus_post_burnin(const Vector& feature, const Vector& theta_hat,
                         const PsdFactor& h_factor, const PsdFactor& v_factor, double nu,
                         double kappa) {
    static const double sqrt_e = std::sqrt(std::numbers::e);
    return sqrt_e * sigmoid_deriv(feature.dot(theta_hat)) * nu * h_factor.inverse_norm(feature) +
           second_order_term(feature, v_factor, nu, kappa);
}

double bonus_post_burnin(const Vector& feature, const Vector& theta_hat,
                         const Matrix& hessian_at_hat, const Matrix& v_matrix, double nu,
                         double kappa) {
    return bonus_post_burnin(feature, theta_hat, PsdFactor(hessian_at_hat), PsdFactor(v_matrix), nu,
                             kappa);
}

Vector plug_in_means(const Vector& theta, const FeatureMap& features) {
    const Vector z = features * theta;
    return z.unaryExpr([](double x) { return sigmoid(x); });
}

Vector ucb_values(const UcbVector& ucbs) {
    Vector out(static_cast<Eigen::Index>(ucbs.size()));
    for (std::size_t i = 0; i < ucbs.size(); ++i) out[static_cast<Eigen::Index>(i)] = ucbs[i].ucb;
    return out;
}

UcbVector assemble_ucbs(const EstimatorState& est, const FeatureMap& features, BonusKind kind,
                        double radius, double agnostic_scale) {
    const Vector means = plug_in_means(est.theta_hat, features);
    const PsdFactor v_factor(est.covariance_v);
    std::optional<PsdFactor> h_factor;
    if (kind != BonusKind::agnostic) h_factor.emplace(est.hessian_at_hat);

    UcbVector out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const Vector phi = features.row(i).transpose();
        double bonus = 0.0;
        switch (kind) {
            case BonusKind::agnostic:
                bonus = bonus_agnostic(phi, v_factor, radius, agnostic_scale);
                break;
            case BonusKind::adaptive:
                bonus = bonus_adaptive(phi, est.theta_hat, *h_factor, v_factor, radius, est.kappa);
                break;
            case BonusKind::post_burnin:
                bonus = bonus_post_burnin(phi, est.theta_hat, *h_factor, v_factor, radius, est.kappa);
                break;
        }
        auto& entry = out[static_cast<std::size_t>(i)];
        entry.mean_estimate = means[i];
        entry.bonus = bonus;
        entry.ucb = std::clamp(means[i] + bonus, 0.0, 1.0);
    }
    return out;
}

bool BonusVanishingRegion::contains(const Vector& theta, double slack) const {
    if (theta.norm() > L + slack) return false;
    return std::all_of(constraints.begin(), constraints.end(), [&](const Constraint& c) {
        return std::abs(theta.dot(c.feature)) <= c.cap + slack;
    });
}

double BonusVanishingRegion::violation(const Vector& theta) const {
    double total = 0.0;
    const double ball = std::max(0.0, theta.norm() - L);
    total += ball * ball;
    for (const auto& c : constraints) {
        const double excess = std::max(0.0, std::abs(theta.dot(c.feature)) - c.cap);
        total += excess * excess;
    }
    return total;
}

BonusVanishingRegion update_bonus_vanishing_region(BonusVanishingRegion region,
                                                   const std::vector<Vector>& triggered_features,
                                                   const Vector& theta_hat, const Matrix& v_matrix,
                                                   double beta) {
    if (triggered_features.empty()) return region;
    const PsdFactor v_factor(v_matrix);
    for (const auto& phi : triggered_features) {
        const double cap = std::abs(theta_hat.dot(phi)) + beta * v_factor.inverse_norm(phi);
        region.constraints.push_back({phi, cap});
    }
    return region;
}

Vector project_to_bonus_region(const BonusVanishingRegion& region, const ObservationLog& log,
                               double lambda_t, const Vector& theta_hat, Rng& rng, int restarts) {
    const Eigen::Index d = theta_hat.size();
    auto into_ball = [&](Vector v) {
        const double n = v.norm();
        if (n > region.L) v *= region.L / n;
        return v;
    };
    if (region.contains(theta_hat)) return theta_hat;

    const Vector target = g_map(theta_hat, log, lambda_t);
    constexpr double kPenalty = 1e4;
    auto objective = [&](const Vector& theta) {
        const Vector diff = g_map(theta, log, lambda_t) - target;
        const double dist = PsdFactor(hessian(theta, log, lambda_t)).inverse_norm_sq(diff);
        return dist + kPenalty * region.violation(theta);
    };

    std::vector<Vector> starts{into_ball(theta_hat)};
    for (int r = 0; r < restarts; ++r) {
        Vector v(d);
        for (Eigen::Index j = 0; j < d; ++j) v[j] = uniform(rng, -1.0, 1.0);
        // Uniform direction scaled to a random radius inside the ball.
        v *= region.L * uniform01(rng) / std::max(v.norm(), 1e-12);
        starts.push_back(std::move(v));
    }

    std::optional<Vector> best;
    double best_value = std::numeric_limits<double>::infinity();
    for (Vector theta : starts) {
        double value = objective(theta);
        double step = 0.1;
        for (int it = 0; it < 60 && step > 1e-10; ++it) {
            Vector grad(d);
            const double h = 1e-6;
            for (Eigen::Index j = 0; j < d; ++j) {
                Vector plus = theta, minus = theta;
                plus[j] += h;
                minus[j] -= h;
                grad[j] = (objective(plus) - objective(minus)) / (2.0 * h);
            }
            const double gnorm = grad.norm();
            if (gnorm < 1e-10) break;
            const Vector candidate = theta - step * grad / gnorm;
            const double cv = objective(candidate);
            if (cv < value) {
                theta = candidate;
                value = cv;
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        if (region.contains(theta) && value < best_value) {
            best_value = value;
            best = theta;
        }
    }
    return best ? *best : into_ball(theta_hat);
}

Ellipsoid build_nonlinearity_region(const Vector& theta_hat, const Matrix& v_matrix,
                                    const RadiusParams& params, double lambda0) {
    const double L = params.L;
    return Ellipsoid{theta_hat, v_matrix,
                     (L * L + 4.0 * L + 4.75) * std::sqrt(params.kappa * lambda0)};
}

EllipticalPotential::EllipticalPotential(Eigen::Index d) : gram_(Matrix::Zero(d, d)) {}

double EllipticalPotential::add_round(const std::vector<Vector>& features, double reg) {
    const Eigen::Index d = gram_.rows();
    const PsdFactor v(gram_ + reg * Matrix::Identity(d, d));
    for (const auto& x : features) total_ += v.inverse_norm_sq(x);
    for (const auto& x : features) gram_.noalias() += x * x.transpose();
    return total_;
}

double EllipticalPotential::bound(Eigen::Index d, double lambda_next, long t) {
    return 2.0 * static_cast<double>(d) * std::log(lambda_next + static_cast<double>(t));
}

}  // namespace clogb
