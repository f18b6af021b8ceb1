#pragma once

#include "clogb/numeric.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace clogb {

using Edge = std::pair<int, int>;

/// Ranked list of K items out of m; arms are items.
struct Cascading {
    int m = 0;
    int K = 0;
};

/// Probabilistic maximum coverage. Arms 0..|E|-1 are server-user edges; when
/// user_triggering is set, arms |E|..|E|+|V|-1 are the user consumption arms.
struct Pmc {
    int servers = 0;
    int users = 0;
    std::vector<Edge> edges;  // (server, user)
    int budget = 1;
    bool user_triggering = true;
};

/// Bipartite matching of every left node into a distinct right node; arms are allowed pairs.
struct Matching {
    int left = 0;
    int right = 0;
    std::vector<Edge> pairs;  // (left, right)
};

/// Source-to-destination simple paths in a directed graph; arms are edges.
struct Routing {
    int nodes = 0;
    std::vector<Edge> edges;  // (from, to)
    int source = 0;
    int dest = 0;
};

using EnvironmentVariant = std::variant<Cascading, Pmc, Matching, Routing>;

/// Super arm. Item meaning depends on the environment: ranked item list
/// (cascading), sorted server set (PMC), chosen pair arms sorted by left
/// node (matching), edge sequence from source to destination (routing).
struct Action {
    std::vector<int> items;
    auto operator<=>(const Action&) const = default;
};

struct Feedback {
    std::vector<int> triggered;          // tau_t, in triggering order
    std::vector<std::uint8_t> outcomes;  // one per triggered arm
    double realized_reward = 0.0;
};

using Outcomes = std::vector<std::uint8_t>;

class Environment {
public:
    explicit Environment(EnvironmentVariant variant);

    const EnvironmentVariant& variant() const { return variant_; }
    std::string name() const;
    /// Number of base arms m.
    int arm_count() const { return arm_count_; }
    /// Upper bound K on |tau_t| for any action and outcome.
    int max_triggered() const { return max_triggered_; }

    /// Throws std::invalid_argument if the action is infeasible.
    void validate(const Action& action) const;
    /// Base arms that can be triggered by the action.
    std::vector<int> support(const Action& action) const;

    /// Every feasible action in canonical lexicographic order, or nullopt if
    /// there are more than `limit`.
    std::optional<std::vector<Action>> enumerate_actions(std::size_t limit) const;
    /// Enumerated action set when it has at most kSmallActionSet actions.
    const std::optional<std::vector<Action>>& small_action_set() const { return small_actions_; }
    static constexpr std::size_t kSmallActionSet = 100000;

    /// Arm adjacency helpers for PMC.
    const std::vector<std::vector<int>>& server_edges() const { return server_edges_; }
    const std::vector<std::vector<int>>& user_edges() const { return user_edges_; }

private:
    EnvironmentVariant variant_;
    int arm_count_ = 0;
    int max_triggered_ = 0;
    std::vector<std::vector<int>> server_edges_;  // PMC: edge arms by server
    std::vector<std::vector<int>> user_edges_;    // PMC: edge arms by user
    std::optional<std::vector<Action>> small_actions_;
};

Feedback trigger_and_observe(const Environment& env, const Action& action,
                             const Outcomes& outcomes);
double expected_reward(const Environment& env, const Action& action, const Vector& mu);
double triggering_prob(const Environment& env, int arm, const Action& action, const Vector& mu);

/// (B_v, B_1, lambda) of the smoothness conditions. B_v and lambda are unset
/// when only the 1-norm TPM condition is known (matching).
struct SmoothnessCoefficients {
    std::optional<double> B_v;
    double B_1 = 1.0;
    std::optional<double> lambda;
};
SmoothnessCoefficients smoothness_coefficients(const Environment& env);

/// B_1 sum_i p_i^{mu,S} |mu_i - mu'_i|
double tpm_bound(const Environment& env, const Action& action, const Vector& mu, const Vector& mu_prime);
/// TPVM right-hand side with zeta = mu' - mu and eta = 0; needs mu in (0,1)^m.
std::optional<double> tpvm_bound(const Environment& env, const Action& action, const Vector& mu,
                                 const Vector& mu_prime);

/// Rescales x into the unit ball when ||x||_2 > 1.
Vector clip_to_unit_ball(Vector x);

/// theta* with per-round feature maps: either a fixed map or a seeded
/// generator drawing fresh U(-1,1)^d rows (clipped to the unit ball) each round.
class GroundTruth {
public:
    GroundTruth(Vector theta_star, FeatureMap static_map);
    GroundTruth(Vector theta_star, std::uint64_t generator_seed, int m, int d);

    const Vector& theta_star() const { return theta_star_; }
    bool is_static() const { return !generator_seed_.has_value(); }
    int dim() const { return static_cast<int>(theta_star_.size()); }
    int arm_count() const { return m_; }
    /// Feature map of round t (t >= 1).
    FeatureMap feature_map(long t) const;
    /// True means l(theta*' phi_t(i)).
    Vector means(const FeatureMap& features) const;

private:
    Vector theta_star_;
    FeatureMap static_map_;
    std::optional<std::uint64_t> generator_seed_;
    int m_ = 0;
};

/// Independent X_i ~ Bernoulli(l(theta*' phi(i))).
Outcomes sample_outcomes(const GroundTruth& truth, const FeatureMap& features, Rng& rng);

enum class VariantKind { cascading, pmc, matching, routing };
std::string to_string(VariantKind kind);
VariantKind parse_variant(const std::string& name);

/// Dimensions and options for a synthetic instance. When `edges` is set the
/// graph is taken verbatim (instance files); otherwise it is generated.
struct InstanceSpec {
    VariantKind variant = VariantKind::cascading;
    int d = 5;
    double L = 1.0;
    std::uint64_t seed = 1;
    bool time_varying = false;

    int m = 20;  // cascading items
    int K = 5;   // cascading list length

    int servers = 4;  // pmc
    int users = 4;
    int budget = 2;
    bool user_triggering = true;

    int left = 3;  // matching
    int right = 4;

    int nodes = 6;  // routing
    double edge_prob = 0.5;

    std::optional<std::vector<Edge>> edges;
    int source = 0;
    int dest = -1;  // routing; -1 means nodes - 1
};

struct Instance {
    GroundTruth truth;
    Environment env;
};

/// Deterministic in spec.seed. theta* ~ U(-1,1)^d rescaled to ||.|| <= L; features U(-1,1)^d
/// clipped to the unit ball.
Instance synth_instance(const InstanceSpec& spec);

}  // namespace clogb
