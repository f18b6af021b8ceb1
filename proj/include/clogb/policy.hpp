#pragma once

#include "clogb/confidence.hpp"
#include "clogb/environment.hpp"
#include "clogb/logistic.hpp"
#include "clogb/oracle.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace clogb {

enum class AlgorithmKind { clogucb, va_clogucb, eva_clogucb, cucb, epsilon_greedy, linear_ucb, va_linear_ucb };
enum class KappaMode { exact, bound };
enum class ProjectionMode { skip, heuristic };

std::string to_string(AlgorithmKind kind);
AlgorithmKind parse_algorithm(const std::string& name);
bool is_logistic(AlgorithmKind kind);

struct AlgoConfig {
    AlgorithmKind kind = AlgorithmKind::clogucb;
    double delta = 0.0;  // 0 selects 1/T
    KappaMode kappa_mode = KappaMode::exact;
    ProjectionMode projection = ProjectionMode::skip;
    double agnostic_bonus_scale = 0.25;
    double mle_tol = 0.0;  // 0 selects 1/T
    int mle_max_iter = 10000;
    double epsilon = 0.2;
    double t0_scale = 0.02;
    /// Multiplier on the confidence radius (beta, sigma, nu, or the linear-UCB width).
    double radius_scale = 1.0;
    /// Replaces the scaled radius when set; 0 turns the UCB algorithms into plug-in greedy.
    std::optional<double> radius_override;
    double ridge_lambda = 1.0;      // linear baselines
    double variance_floor = 0.05;   // va_linear_ucb
    bool lazy_greedy = false;

    void validate() const;
};

struct PolicyContext {
    const Environment* env = nullptr;
    RadiusParams params;  // K = env->max_triggered(); delta and kappa resolved
    long horizon = 1;
    bool static_features = true;
    std::uint64_t seed = 0;
};

/// Resolves delta (1/T default) and kappa (exact or 4 e^L) for one algorithm.
RadiusParams resolve_params(const AlgoConfig& cfg, const Environment& env, double L, int d,
                            double max_feature_norm, long horizon);

/// Burn-in length ceil(t0_scale (4L^2+16L+19)^2 kappa d^2 log^2(4(2+T)/delta)) clamped to [1, T/2].
long burn_in_length(const RadiusParams& params, long horizon, double t0_scale);
/// Unclamped, unrounded burn-in formula times t0_scale.
double burn_in_formula(const RadiusParams& params, long horizon, double t0_scale);

/// Per-round state of the logistic algorithms, exposed for diagnostics and tests.
struct ParametricSnapshot {
    long round = 0;
    EstimatorState estimator;
    Vector mle;  // unprojected MLE of the round
    BonusKind kind = BonusKind::agnostic;
    double radius = 0.0;  // radius actually used for the bonus
    UcbVector ucbs;
    bool burn_in = false;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    /// Chooses S_t from phi_t.
    virtual Action select(long t, const FeatureMap& features) = 0;
    /// Incorporates the feedback of the action returned by the last select().
    virtual void update(long t, const FeatureMap& features, const Action& action,
                        const Feedback& feedback) = 0;

    virtual const ParametricSnapshot* snapshot() const { return nullptr; }
    /// Elliptical-potential bookkeeping (logistic algorithms only).
    virtual double potential() const { return 0.0; }
    virtual long potential_violations() const { return 0; }
    virtual bool potential_checked() const { return false; }
};

std::unique_ptr<Policy> make_policy(const AlgoConfig& cfg, const PolicyContext& ctx);

struct RoundRecord {
    Action action;
    Feedback feedback;
    Vector true_means;
};

/// One interaction: select, sample outcomes, trigger, update.
RoundRecord play_round(Policy& policy, const Environment& env, const GroundTruth& truth, long t,
                       Rng& env_rng);

/// Concrete policies, exposed for direct testing.
class LogisticPolicyBase : public Policy {
public:
    LogisticPolicyBase(const AlgoConfig& cfg, const PolicyContext& ctx);

    const ParametricSnapshot* snapshot() const override { return &snap_; }
    double potential() const override { return potential_.total(); }
    long potential_violations() const override { return violations_; }
    bool potential_checked() const override { return check_potential_; }
    const ObservationLog& log() const { return log_; }
    const RadiusParams& params() const { return ctx_.params; }
    double lambda_at(long t) const { return schedule_.at(t); }

protected:
    double scaled(double radius) const;
    /// Appends the round's observations and advances the potential check.
    void record(long t, const std::vector<Vector>& features, const std::vector<std::uint8_t>& outcomes);

    AlgoConfig cfg_;
    PolicyContext ctx_;
    RegularizerSchedule schedule_;
    SolverOptions solver_;
    ObservationLog log_;
    EllipticalPotential potential_;
    bool check_potential_ = true;
    long violations_ = 0;
    ParametricSnapshot snap_;
    std::optional<Vector> warm_;
};

class ClogUcb final : public LogisticPolicyBase {
public:
    using LogisticPolicyBase::LogisticPolicyBase;
    std::string name() const override { return "clogucb"; }
    Action select(long t, const FeatureMap& features) override;
    void update(long t, const FeatureMap& features, const Action& action,
                const Feedback& feedback) override;
};

class VaClogUcb final : public LogisticPolicyBase {
public:
    VaClogUcb(const AlgoConfig& cfg, const PolicyContext& ctx);
    std::string name() const override { return "va_clogucb"; }
    Action select(long t, const FeatureMap& features) override;
    void update(long t, const FeatureMap& features, const Action& action,
                const Feedback& feedback) override;
    const BonusVanishingRegion& region() const { return region_; }
    long projections() const { return projections_; }

private:
    BonusVanishingRegion region_;
    Rng rng_;
    long projections_ = 0;
};

class EvaClogUcb final : public LogisticPolicyBase {
public:
    EvaClogUcb(const AlgoConfig& cfg, const PolicyContext& ctx);
    std::string name() const override { return "eva_clogucb"; }
    Action select(long t, const FeatureMap& features) override;
    void update(long t, const FeatureMap& features, const Action& action,
                const Feedback& feedback) override;

    long burn_in_rounds() const { return t0_; }
    bool learning() const { return region_.has_value(); }
    /// Round at which the learning phase began (0 while in burn-in).
    long transition_round() const { return transition_round_; }
    const std::optional<Ellipsoid>& region() const { return region_; }
    int last_burn_in_arm() const { return burn_arm_; }

private:
    long t0_ = 1;
    double lambda0_ = 1.0;
    Matrix burn_gram_;
    int burn_arm_ = -1;
    long transition_round_ = 0;
    std::optional<Ellipsoid> region_;
};

class Cucb final : public Policy {
public:
    explicit Cucb(const PolicyContext& ctx);
    std::string name() const override { return "cucb"; }
    Action select(long t, const FeatureMap& features) override;
    void update(long t, const FeatureMap& features, const Action& action,
                const Feedback& feedback) override;
    Vector ucbs(long t) const;

private:
    PolicyContext ctx_;
    std::vector<long> counts_;
    std::vector<double> means_;
    bool lazy_ = false;
};

class EpsilonGreedy final : public Policy {
public:
    EpsilonGreedy(const AlgoConfig& cfg, const PolicyContext& ctx);
    std::string name() const override { return "epsilon_greedy"; }
    Action select(long t, const FeatureMap& features) override;
    void update(long t, const FeatureMap& features, const Action& action,
                const Feedback& feedback) override;
    bool explored_last() const { return explored_; }

private:
    AlgoConfig cfg_;
    PolicyContext ctx_;
    Rng rng_;
    std::vector<long> counts_;
    std::vector<double> means_;
    bool explored_ = false;
};

/// Ridge-regression UCB on the raw Bernoulli outcomes; with variance
/// weighting each observation is scaled by 1 / max(mu_hat (1 - mu_hat), floor).
class LinearUcb final : public Policy {
public:
    LinearUcb(const AlgoConfig& cfg, const PolicyContext& ctx, bool variance_weighted);
    std::string name() const override { return weighted_ ? "va_linear_ucb" : "linear_ucb"; }
    Action select(long t, const FeatureMap& features) override;
    void update(long t, const FeatureMap& features, const Action& action,
                const Feedback& feedback) override;
    Vector estimate() const;

private:
    AlgoConfig cfg_;
    PolicyContext ctx_;
    bool weighted_;
    Matrix gram_;
    Vector moment_;
};

}  // namespace clogb
