#pragma once

#include "clogb/environment.hpp"

#include <limits>

namespace clogb {

struct OracleResult {
    Action action;
    double value = 0.0;  // expected_reward(env, action, mu)
    double alpha = 1.0;
};

inline constexpr double kOneMinusInvE = 0.63212055882855767;  // 1 - 1/e
inline constexpr double kForbidden = -std::numeric_limits<double>::infinity();

/// Top-K items by mu (ties to the lower index), listed in decreasing mu.
OracleResult topk_oracle(const Vector& mu, int K, const Environment* env = nullptr);

/// Greedy server selection by marginal coverage gain (ties to the lower index).
/// `lazy` enables CELF-style lazy re-evaluation of marginal gains.
OracleResult greedy_pmc(const Vector& mu, const Environment& env, int k, bool lazy = false);

struct Assignment {
    std::vector<int> right_of_left;  // right node matched to each left node
    double value = 0.0;
};

/// Maximum-weight matching of every row into a distinct column; entries equal
/// to kForbidden are disallowed. Throws std::runtime_error when no such
/// matching exists.
Assignment hungarian(const Matrix& weights);

/// Matching oracle: pair weights mu, solved with hungarian().
OracleResult matching_oracle(const Vector& mu, const Environment& env);

/// Most reliable path: Dijkstra on -log(mu_e) with zero-probability edges removed.
/// Throws std::runtime_error when the destination is unreachable.
OracleResult dijkstra_route(const Vector& mu, const Environment& env);

/// Exhaustive argmax of expected_reward; ties to the lexicographically smallest action.
/// Throws std::runtime_error when the action set exceeds `limit`.
OracleResult brute_force_oracle(const Environment& env, const Vector& mu,
                                std::size_t limit = 1000000);

/// The environment's own alpha-approximation oracle (topk, greedy, Hungarian, Dijkstra).
OracleResult solve(const Environment& env, const Vector& mu, bool lazy_greedy = false);

/// Approximation ratio of solve() for this environment.
double oracle_alpha(const Environment& env);

/// Feasible action drawn uniformly when the action set is enumerable; otherwise
/// the oracle's solution under random U(0,1) arm weights.
Action random_action(const Environment& env, Rng& rng);

/// Feasible action containing `arm`, preferring arms with larger `priority`.
/// For cascading and routing the arm is placed where it is always triggered
/// when possible (first in the list / on a path prefix).
Action action_containing(const Environment& env, int arm, const Vector& priority);

}  // namespace clogb
