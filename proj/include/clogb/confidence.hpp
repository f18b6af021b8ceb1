#pragma once

#include "clogb/logistic.hpp"
#include "clogb/numeric.hpp"

#include <vector>

namespace clogb {

/// Problem constants entering every confidence radius.
struct RadiusParams {
    double L = 1.0;      // bound on ||theta||_2
    int d = 1;
    int K = 1;           // max number of triggered arms per round
    double delta = 0.1;
    double kappa = 4.0;

    void validate() const;
    /// log(4 (1 + t K) / delta)
    double log_term(long t) const;
};

// Confidence radii. All share the factor sqrt(d log(4(1+tK)/delta)).
double radius_gamma(long t, const RadiusParams& p);  // (L + 3/2) sqrt(d log(.))
double radius_beta(long t, const RadiusParams& p);   // (L^2 + 4L + 19/4) sqrt(kappa d log(.))
double radius_sigma(long t, const RadiusParams& p);  // (2L + 1)(2L + 3) sqrt(d log(.))
double radius_nu(long t, const RadiusParams& p);     // 3 (L + 3/2) sqrt(d log(.))

/// kappa upper bound 4 exp(L).
double kappa_bound(double L);
/// Smallest admissible kappa for features of norm <= max_feature_norm and
/// ||theta|| <= L: 1 / l'(L * max_feature_norm), never below 4.
double kappa_exact(double L, double max_feature_norm);

/// (beta / 4) ||phi||_{V^{-1}} at the default scale; `scale` replaces the 1/4.
double bonus_agnostic(const Vector& feature, const PsdFactor& v_factor, double beta,
                      double scale = 0.25);
double bonus_agnostic(const Vector& feature, const Matrix& v_matrix, double beta,
                      double scale = 0.25);

/// sigma l'(phi' theta) ||phi||_{H^{-1}} + kappa sigma^2 ||phi||^2_{V^{-1}} / 8
double bonus_adaptive(const Vector& feature, const Vector& theta_hat, const PsdFactor& h_factor,
                      const PsdFactor& v_factor, double sigma, double kappa);
double bonus_adaptive(const Vector& feature, const Vector& theta_hat, const Matrix& hessian_at_hat,
                      const Matrix& v_matrix, double sigma, double kappa);

/// sqrt(e) l'(phi' theta) nu ||phi||_{H^{-1}} + kappa nu^2 ||phi||^2_{V^{-1}} / 8
double bonus_post_burnin(const Vector& feature, const Vector& theta_hat,
                         const PsdFactor& h_factor, const PsdFactor& v_factor, double nu,
                         double kappa);
double bonus_post_burnin(const Vector& feature, const Vector& theta_hat,
                         const Matrix& hessian_at_hat, const Matrix& v_matrix, double nu,
                         double kappa);

enum class BonusKind { agnostic, adaptive, post_burnin };

struct UcbEntry {
    double mean_estimate = 0.5;
    double bonus = 0.0;
    double ucb = 0.5;
};
using UcbVector = std::vector<UcbEntry>;

/// Per-arm UCBs clamp(l(theta_hat' phi_i) + rho_i, 0, 1). `radius` is beta,
/// sigma or nu depending on the kind. V (and H for the adaptive kinds) is
/// factorized once for all arms.
UcbVector assemble_ucbs(const EstimatorState& est, const FeatureMap& features, BonusKind kind,
                        double radius, double agnostic_scale = 0.25);

/// Mean estimates l(theta' phi_i) for every row of `features`.
Vector plug_in_means(const Vector& theta, const FeatureMap& features);
Vector ucb_values(const UcbVector& ucbs);

/// Constraints |theta' phi| <= cap accumulated over rounds, intersected with
/// the ball ||theta||_2 <= L.
struct BonusVanishingRegion {
    struct Constraint {
        Vector feature;
        double cap = 0.0;
    };
    std::vector<Constraint> constraints;
    double L = 1.0;

    bool contains(const Vector& theta, double slack = 1e-9) const;
    /// Sum of squared constraint violations (0 inside the region).
    double violation(const Vector& theta) const;
};

/// Appends cap |theta_hat' phi| + beta ||phi||_{V^{-1}} for every triggered feature.
BonusVanishingRegion update_bonus_vanishing_region(BonusVanishingRegion region,
                                                   const std::vector<Vector>& triggered_features,
                                                   const Vector& theta_hat, const Matrix& v_matrix,
                                                   double beta);

/// Heuristic search for argmin over the region of ||g(theta) - g(theta_hat)||_{H^{-1}(theta)}:
/// penalized gradient descent from theta_hat and `restarts` random points of the
/// L-ball; keeps the best feasible point, else theta_hat scaled into the ball.
Vector project_to_bonus_region(const BonusVanishingRegion& region, const ObservationLog& log,
                               double lambda_t, const Vector& theta_hat, Rng& rng,
                               int restarts = 8);

/// Ellipsoid {theta : ||theta - theta_hat||_V <= (L^2 + 4L + 19/4) sqrt(kappa lambda0)}.
Ellipsoid build_nonlinearity_region(const Vector& theta_hat, const Matrix& v_matrix,
                                    const RadiusParams& params, double lambda0);

/// Running check of sum_s sum_{i in tau_s} ||x||^2_{V_s^{-1}} <= 2 d log(lambda_{t+1} + t),
/// with V_s = sum x x' + reg_s I and reg_s >= lambda_s.
class EllipticalPotential {
public:
    explicit EllipticalPotential(Eigen::Index d);

    /// Adds the round-t features measured against V_t (regularizer `reg`);
    /// returns the new cumulative potential.
    double add_round(const std::vector<Vector>& features, double reg);
    double total() const { return total_; }
    /// 2 d log(lambda_next + t)
    static double bound(Eigen::Index d, double lambda_next, long t);

private:
    Matrix gram_;
    double total_ = 0.0;
};

}  // namespace clogb
