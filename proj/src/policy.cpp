#include "clogb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clogb {

std::string to_string(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::clogucb: return "clogucb";
        case AlgorithmKind::va_clogucb: return "va_clogucb";
        case AlgorithmKind::eva_clogucb: return "eva_clogucb";
        case AlgorithmKind::cucb: return "cucb";
        case AlgorithmKind::epsilon_greedy: return "epsilon_greedy";
        case AlgorithmKind::linear_ucb: return "linear_ucb";
        case AlgorithmKind::va_linear_ucb: return "va_linear_ucb";
    }
    return "?";
}

AlgorithmKind parse_algorithm(const std::string& name) {
    for (auto k : {AlgorithmKind::clogucb, AlgorithmKind::va_clogucb, AlgorithmKind::eva_clogucb,
                   AlgorithmKind::cucb, AlgorithmKind::epsilon_greedy, AlgorithmKind::linear_ucb,
                   AlgorithmKind::va_linear_ucb}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool is_logistic(AlgorithmKind kind) {
    return kind == AlgorithmKind::clogucb || kind == AlgorithmKind::va_clogucb ||
           kind == AlgorithmKind::eva_clogucb;
}

void AlgoConfig::validate() const {
    if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("delta must be in (0,1] (0 = 1/T)");
    if (agnostic_bonus_scale != 0.25 && agnostic_bonus_scale != 1.0) {
        throw std::invalid_argument("agnostic_bonus_scale must be 0.25 or 1.0");
    }
    if (mle_tol < 0.0) throw std::invalid_argument("mle_tol must be >= 0 (0 = 1/T)");
    if (mle_max_iter < 1) throw std::invalid_argument("mle_max_iter must be >= 1");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must be in [0,1]");
    if (!(t0_scale > 0.0 && t0_scale <= 1.0)) throw std::invalid_argument("t0_scale must be in (0,1]");
    if (!(radius_scale >= 0.0)) throw std::invalid_argument("radius_scale must be >= 0");
    if (radius_override && *radius_override < 0.0) throw std::invalid_argument("radius_override must be >= 0");
    if (!(ridge_lambda > 0.0)) throw std::invalid_argument("ridge_lambda must be positive");
    if (!(variance_floor > 0.0 && variance_floor <= 0.25)) {
        throw std::invalid_argument("variance_floor must be in (0, 0.25]");
    }
}

RadiusParams resolve_params(const AlgoConfig& cfg, const Environment& env, double L, int d,
                            double max_feature_norm, long horizon) {
    RadiusParams p;
    p.L = L;
    p.d = d;
    p.K = env.max_triggered();
    p.delta = cfg.delta > 0.0 ? cfg.delta : 1.0 / static_cast<double>(horizon);
    p.kappa = cfg.kappa_mode == KappaMode::bound ? kappa_bound(L) : kappa_exact(L, max_feature_norm);
    p.validate();
    return p;
}

double burn_in_formula(const RadiusParams& p, long horizon, double t0_scale) {
    const double lead = 4.0 * p.L * p.L + 16.0 * p.L + 19.0;
    const double lg = std::log(4.0 * (2.0 + static_cast<double>(horizon)) / p.delta);
    return t0_scale * lead * lead * p.kappa * p.d * p.d * lg * lg;
}

long burn_in_length(const RadiusParams& params, long horizon, double t0_scale) {
    if (!(t0_scale > 0.0 && t0_scale <= 1.0)) throw std::invalid_argument("t0_scale must be in (0,1]");
    const double raw = std::ceil(burn_in_formula(params, horizon, t0_scale));
    const long cap = std::max(1L, horizon / 2);
    if (raw >= static_cast<double>(cap)) return cap;
    return std::max(1L, static_cast<long>(raw));
}

RoundRecord play_round(Policy& policy, const Environment& env, const GroundTruth& truth, long t,
                       Rng& env_rng) {
    const FeatureMap features = truth.feature_map(t);
    RoundRecord rec;
    rec.action = policy.select(t, features);
    const Outcomes x = sample_outcomes(truth, features, env_rng);
    rec.feedback = trigger_and_observe(env, rec.action, x);
    rec.true_means = truth.means(features);
    policy.update(t, features, rec.action, rec.feedback);
    return rec;
}

namespace {

Vector feature_of(const FeatureMap& features, int arm) { return features.row(arm).transpose(); }

std::uint64_t policy_seed(const PolicyContext& ctx) { return mix_seed(ctx.seed, 0x9011c7u); }

}  // namespace

// ---------------------------------------------------------------------------
// Logistic algorithms

LogisticPolicyBase::LogisticPolicyBase(const AlgoConfig& cfg, const PolicyContext& ctx)
    : cfg_(cfg), ctx_(ctx), log_(ctx.params.d), potential_(ctx.params.d) {
    cfg_.validate();
    ctx_.params.validate();
    if (!ctx_.env) throw std::invalid_argument("policy needs an environment");
    schedule_ = RegularizerSchedule{ctx_.params.d, ctx_.params.K, ctx_.params.delta};
    solver_.tol = cfg_.mle_tol > 0.0 ? cfg_.mle_tol : 1.0 / static_cast<double>(ctx_.horizon);
    solver_.max_iter = cfg_.mle_max_iter;
    // The potential bound needs lambda_1 >= K.
    check_potential_ = schedule_.at(1) >= static_cast<double>(ctx_.params.K);
}

double LogisticPolicyBase::scaled(double radius) const {
    return cfg_.radius_override ? *cfg_.radius_override : cfg_.radius_scale * radius;
}

void LogisticPolicyBase::record(long t, const std::vector<Vector>& features,
                                const std::vector<std::uint8_t>& outcomes) {
    potential_.add_round(features, ctx_.params.kappa * schedule_.at(t));
    if (check_potential_ &&
        potential_.total() > EllipticalPotential::bound(ctx_.params.d, schedule_.at(t + 1), t) + 1e-9) {
        ++violations_;
    }
    log_.begin_round();
    for (std::size_t j = 0; j < features.size(); ++j) log_.add(features[j], outcomes[j] != 0);
}

Action ClogUcb::select(long t, const FeatureMap& features) {
    const double lambda = schedule_.at(t);
    const FitResult fit = fit_mle(log_, lambda, solver_, warm_);
    warm_ = fit.theta;

    snap_.round = t;
    snap_.mle = fit.theta;
    snap_.estimator.theta_hat = fit.theta;
    snap_.estimator.lambda_t = lambda;
    snap_.estimator.kappa = ctx_.params.kappa;
    snap_.estimator.covariance_v = covariance(log_, ctx_.params.kappa, lambda);
    snap_.estimator.hessian_at_hat = Matrix();
    snap_.kind = BonusKind::agnostic;
    snap_.radius = scaled(radius_beta(t, ctx_.params));
    snap_.ucbs = assemble_ucbs(snap_.estimator, features, BonusKind::agnostic, snap_.radius,
                               cfg_.agnostic_bonus_scale);
    return solve(*ctx_.env, ucb_values(snap_.ucbs), cfg_.lazy_greedy).action;
}

void ClogUcb::update(long t, const FeatureMap& features, const Action&, const Feedback& fb) {
    std::vector<Vector> phis;
    for (int arm : fb.triggered) phis.push_back(feature_of(features, arm));
    record(t, phis, fb.outcomes);
}

VaClogUcb::VaClogUcb(const AlgoConfig& cfg, const PolicyContext& ctx)
    : LogisticPolicyBase(cfg, ctx), rng_(policy_seed(ctx)) {
    region_.L = ctx_.params.L;
}

Action VaClogUcb::select(long t, const FeatureMap& features) {
    const double lambda = schedule_.at(t);
    const FitResult fit = fit_mle(log_, lambda, solver_, warm_);
    warm_ = fit.theta;

    Vector theta_h = fit.theta;
    if (cfg_.projection == ProjectionMode::heuristic && !region_.contains(fit.theta)) {
        theta_h = project_to_bonus_region(region_, log_, lambda, fit.theta, rng_);
        ++projections_;
    }
    snap_.round = t;
    snap_.mle = fit.theta;
    snap_.estimator.theta_hat = theta_h;
    snap_.estimator.lambda_t = lambda;
    snap_.estimator.kappa = ctx_.params.kappa;
    snap_.estimator.covariance_v = covariance(log_, ctx_.params.kappa, lambda);
    snap_.estimator.hessian_at_hat = hessian(theta_h, log_, lambda);
    snap_.kind = BonusKind::adaptive;
    snap_.radius = scaled(radius_sigma(t, ctx_.params));
    snap_.ucbs = assemble_ucbs(snap_.estimator, features, BonusKind::adaptive, snap_.radius);
    return solve(*ctx_.env, ucb_values(snap_.ucbs), cfg_.lazy_greedy).action;
}

void VaClogUcb::update(long t, const FeatureMap& features, const Action&, const Feedback& fb) {
    std::vector<Vector> phis;
    for (int arm : fb.triggered) phis.push_back(feature_of(features, arm));
    if (cfg_.projection == ProjectionMode::heuristic) {
        region_ = update_bonus_vanishing_region(std::move(region_), phis, snap_.mle,
                                                snap_.estimator.covariance_v,
                                                scaled(radius_beta(t, ctx_.params)));
    }
    record(t, phis, fb.outcomes);
}

EvaClogUcb::EvaClogUcb(const AlgoConfig& cfg, const PolicyContext& ctx)
    : LogisticPolicyBase(cfg, ctx), burn_gram_(Matrix::Zero(ctx.params.d, ctx.params.d)) {
    if (!ctx_.static_features) {
        throw std::invalid_argument("eva_clogucb requires a time-invariant feature map");
    }
    t0_ = burn_in_length(ctx_.params, ctx_.horizon, cfg_.t0_scale);
    lambda0_ = ctx_.params.d * std::log(4.0 * (2.0 + static_cast<double>(t0_)) / ctx_.params.delta);
}

Action EvaClogUcb::select(long t, const FeatureMap& features) {
    const auto& p = ctx_.params;
    const Eigen::Index d = p.d;
    snap_.round = t;
    snap_.estimator.kappa = p.kappa;

    if (t <= t0_) {
        snap_.burn_in = true;
        const Matrix v = burn_gram_ + p.kappa * lambda0_ * Matrix::Identity(d, d);
        const PsdFactor vf(v);
        Vector width(features.rows());
        for (Eigen::Index i = 0; i < features.rows(); ++i) width[i] = vf.inverse_norm(feature_of(features, static_cast<int>(i)));
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < width.size(); ++i) {
            if (width[i] > width[best]) best = i;
        }
        burn_arm_ = static_cast<int>(best);
        snap_.estimator.covariance_v = v;
        snap_.ucbs.clear();
        return action_containing(*ctx_.env, burn_arm_, width);
    }

    snap_.burn_in = false;
    if (!region_) {
        // Close the burn-in: MLE with lambda_0 over the burn-in log and the ellipsoid around it.
        const FitResult fit0 = fit_mle(log_, lambda0_, solver_);
        const Matrix v0 = burn_gram_ + p.kappa * lambda0_ * Matrix::Identity(d, d);
        region_ = build_nonlinearity_region(fit0.theta, v0, p, lambda0_);
        transition_round_ = t;
        warm_ = fit0.theta;
    }
    const double lambda = schedule_.at(t);
    const FitResult fit = fit_mle_constrained(log_, lambda, *region_, solver_, warm_);
    warm_ = fit.theta;

    snap_.mle = fit.theta;
    snap_.estimator.theta_hat = fit.theta;
    snap_.estimator.lambda_t = lambda;
    snap_.estimator.covariance_v = covariance(log_, p.kappa, lambda);
    snap_.estimator.hessian_at_hat = hessian(fit.theta, log_, lambda);
    snap_.kind = BonusKind::post_burnin;
    snap_.radius = scaled(radius_nu(t, p));
    snap_.ucbs = assemble_ucbs(snap_.estimator, features, BonusKind::post_burnin, snap_.radius);
    return solve(*ctx_.env, ucb_values(snap_.ucbs), cfg_.lazy_greedy).action;
}

void EvaClogUcb::update(long t, const FeatureMap& features, const Action&, const Feedback& fb) {
    std::vector<Vector> phis;
    std::vector<std::uint8_t> xs;
    if (t <= t0_) {
        // Burn-in keeps only the designated arm's outcome.
        for (std::size_t j = 0; j < fb.triggered.size(); ++j) {
            if (fb.triggered[j] != burn_arm_) continue;
            const Vector phi = feature_of(features, burn_arm_);
            burn_gram_.noalias() += phi * phi.transpose();
            phis.push_back(phi);
            xs.push_back(fb.outcomes[j]);
        }
    } else {
        for (int arm : fb.triggered) phis.push_back(feature_of(features, arm));
        xs = fb.outcomes;
    }
    record(t, phis, xs);
}

// ---------------------------------------------------------------------------
// Baselines

Cucb::Cucb(const PolicyContext& ctx)
    : ctx_(ctx), counts_(static_cast<std::size_t>(ctx.env->arm_count()), 0),
      means_(static_cast<std::size_t>(ctx.env->arm_count()), 0.0) {}

Vector Cucb::ucbs(long t) const {
    Vector u(static_cast<Eigen::Index>(counts_.size()));
    const double log_t = std::log(static_cast<double>(std::max(t, 1L)));
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        if (counts_[i] == 0) {
            u[e] = 1.0;
        } else {
            u[e] = std::min(1.0, means_[i] + std::sqrt(3.0 * log_t / (2.0 * static_cast<double>(counts_[i]))));
        }
    }
    return u;
}

Action Cucb::select(long t, const FeatureMap&) { return solve(*ctx_.env, ucbs(t)).action; }

namespace {

void update_means(std::vector<long>& counts, std::vector<double>& means, const Feedback& fb) {
    for (std::size_t j = 0; j < fb.triggered.size(); ++j) {
        const auto i = static_cast<std::size_t>(fb.triggered[j]);
        ++counts[i];
        means[i] += (static_cast<double>(fb.outcomes[j]) - means[i]) / static_cast<double>(counts[i]);
    }
}

}  // namespace

void Cucb::update(long, const FeatureMap&, const Action&, const Feedback& fb) {
    update_means(counts_, means_, fb);
}

EpsilonGreedy::EpsilonGreedy(const AlgoConfig& cfg, const PolicyContext& ctx)
    : cfg_(cfg), ctx_(ctx), rng_(policy_seed(ctx)),
      counts_(static_cast<std::size_t>(ctx.env->arm_count()), 0),
      means_(static_cast<std::size_t>(ctx.env->arm_count()), 0.0) {
    cfg_.validate();
}

Action EpsilonGreedy::select(long, const FeatureMap&) {
    explored_ = cfg_.epsilon > 0.0 && uniform01(rng_) < cfg_.epsilon;
    if (explored_) return random_action(*ctx_.env, rng_);
    // Unobserved arms sit at 0; a tiny floor keeps routing paths feasible.
    const Vector mu = Eigen::Map<const Vector>(means_.data(), static_cast<Eigen::Index>(means_.size()))
                          .cwiseMax(1e-12);
    return solve(*ctx_.env, mu).action;
}

void EpsilonGreedy::update(long, const FeatureMap&, const Action&, const Feedback& fb) {
    update_means(counts_, means_, fb);
}

LinearUcb::LinearUcb(const AlgoConfig& cfg, const PolicyContext& ctx, bool variance_weighted)
    : cfg_(cfg), ctx_(ctx), weighted_(variance_weighted),
      gram_(cfg.ridge_lambda * Matrix::Identity(ctx.params.d, ctx.params.d)),
      moment_(Vector::Zero(ctx.params.d)) {
    cfg_.validate();
}

Vector LinearUcb::estimate() const { return psd_solve(gram_, moment_); }

Action LinearUcb::select(long t, const FeatureMap& features) {
    const auto& p = ctx_.params;
    const double width =
        cfg_.radius_override
            ? *cfg_.radius_override
            : cfg_.radius_scale *
                  std::sqrt(p.d * std::log((1.0 + static_cast<double>(t) * p.K) / p.delta));
    const PsdFactor factor(gram_);
    const Vector theta = factor.solve(moment_);
    Vector u(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        const Vector phi = feature_of(features, static_cast<int>(i));
        u[i] = std::clamp(phi.dot(theta) + width * factor.inverse_norm(phi), 0.0, 1.0);
    }
    return solve(*ctx_.env, u).action;
}

void LinearUcb::update(long, const FeatureMap& features, const Action&, const Feedback& fb) {
    const Vector theta = weighted_ ? estimate() : Vector();
    for (std::size_t j = 0; j < fb.triggered.size(); ++j) {
        const Vector phi = feature_of(features, fb.triggered[j]);
        double w = 1.0;
        if (weighted_) {
            const double mu = std::clamp(phi.dot(theta), 0.0, 1.0);
            w = 1.0 / std::max(mu * (1.0 - mu), cfg_.variance_floor);
        }
        gram_.noalias() += w * phi * phi.transpose();
        moment_ += w * static_cast<double>(fb.outcomes[j]) * phi;
    }
}

std::unique_ptr<Policy> make_policy(const AlgoConfig& cfg, const PolicyContext& ctx) {
    switch (cfg.kind) {
        case AlgorithmKind::clogucb: return std::make_unique<ClogUcb>(cfg, ctx);
        case AlgorithmKind::va_clogucb: return std::make_unique<VaClogUcb>(cfg, ctx);
        case AlgorithmKind::eva_clogucb: return std::make_unique<EvaClogUcb>(cfg, ctx);
        case AlgorithmKind::cucb: return std::make_unique<Cucb>(ctx);
        case AlgorithmKind::epsilon_greedy: return std::make_unique<EpsilonGreedy>(cfg, ctx);
        case AlgorithmKind::linear_ucb: return std::make_unique<LinearUcb>(cfg, ctx, false);
        case AlgorithmKind::va_linear_ucb: return std::make_unique<LinearUcb>(cfg, ctx, true);
    }
    throw std::invalid_argument("make_policy: unknown algorithm");
}

}  // namespace clogb
