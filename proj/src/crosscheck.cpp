#include "clogb/crosscheck.hpp"

#include "clogb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace clogb {

namespace {

// Arm means in (0,1]; every other instance is rounded to one decimal to force ties.
Vector random_means(Rng& rng, int m, bool coarse) {
    Vector mu(m);
    for (int i = 0; i < m; ++i) {
        const double u = uniform01(rng);
        mu[i] = coarse ? (1.0 + std::round(u * 9.0)) / 10.0 : std::max(u, 1e-9);
    }
    return mu;
}

int between(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

OracleCheck run(const std::string& name, int n, Rng& rng,
                const std::function<InstanceSpec(Rng&)>& make_spec,
                const std::function<OracleResult(const Environment&, const Vector&)>& oracle,
                double ratio) {
    OracleCheck out{name, n, 0, {}};
    for (int k = 0; k < n; ++k) {
        InstanceSpec spec = make_spec(rng);
        spec.seed = rng();
        const Instance inst = synth_instance(spec);
        const Vector mu = random_means(rng, inst.env.arm_count(), k % 2 == 1);
        const OracleResult got = oracle(inst.env, mu);
        inst.env.validate(got.action);
        const double best = brute_force_oracle(inst.env, mu).value;
        const double value = expected_reward(inst.env, got.action, mu);
        const bool ok = std::abs(value - got.value) <= 1e-12 && value >= ratio * best - 1e-12 &&
                        (ratio < 1.0 || std::abs(value - best) <= 1e-12);
        if (!ok) {
            if (out.failures == 0) {
                std::ostringstream os;
                os << "instance " << k << ": oracle " << value << " vs optimum " << best;
                out.first_failure = os.str();
            }
            ++out.failures;
        }
    }
    return out;
}

}  // namespace

std::vector<OracleCheck> check_oracles(int n, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xc0ffee));
    std::vector<OracleCheck> out;

    out.push_back(run(
        "topk", n, rng,
        [](Rng& r) {
            InstanceSpec s;
            s.variant = VariantKind::cascading;
            s.d = 2;
            s.m = between(r, 1, 8);
            s.K = between(r, 1, s.m);
            return s;
        },
        [](const Environment& env, const Vector& mu) { return solve(env, mu); }, 1.0));

    out.push_back(run(
        "hungarian", n, rng,
        [](Rng& r) {
            InstanceSpec s;
            s.variant = VariantKind::matching;
            s.d = 2;
            s.right = between(r, 1, 6);
            s.left = between(r, 1, s.right);
            s.edge_prob = uniform(r, 0.3, 1.0);
            return s;
        },
        [](const Environment& env, const Vector& mu) { return matching_oracle(mu, env); }, 1.0));

    out.push_back(run(
        "dijkstra", n, rng,
        [](Rng& r) {
            InstanceSpec s;
            s.variant = VariantKind::routing;
            s.d = 2;
            s.nodes = between(r, 2, 7);
            s.edge_prob = uniform(r, 0.2, 0.8);
            return s;
        },
        [](const Environment& env, const Vector& mu) { return dijkstra_route(mu, env); }, 1.0));

    out.push_back(run(
        "greedy_pmc", n, rng,
        [](Rng& r) {
            InstanceSpec s;
            s.variant = VariantKind::pmc;
            s.d = 2;
            s.servers = between(r, 1, 6);
            s.users = between(r, 1, 6);
            s.budget = between(r, 1, s.servers);
            s.edge_prob = uniform(r, 0.2, 0.8);
            s.user_triggering = r() % 2 == 0;
            return s;
        },
        [](const Environment& env, const Vector& mu) {
            const auto& p = std::get<Pmc>(env.variant());
            return greedy_pmc(mu, env, p.budget);
        },
        kOneMinusInvE));
    return out;
}

}  // namespace clogb
