#include "clogb/environment.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace clogb {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void infeasible(const std::string& why) {
    throw std::invalid_argument("infeasible action: " + why);
}

void check_edges(const std::vector<Edge>& edges, int a, int b, const char* what) {
    std::set<Edge> seen;
    for (const auto& [u, v] : edges) {
        if (u < 0 || u >= a || v < 0 || v >= b) {
            throw std::invalid_argument(std::string(what) + ": endpoint out of range");
        }
        if (!seen.insert({u, v}).second) {
            throw std::invalid_argument(std::string(what) + ": duplicate edge");
        }
    }
}

// C(n, k), saturating at `cap + 1`.
std::size_t binomial_capped(int n, int k, std::size_t cap) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long double r = 1.0L;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > static_cast<long double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(r + 0.5L);
}

void for_each_combination(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    if (k > n) return;
    for (;;) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

double at(const Vector& mu, int arm) { return mu[static_cast<Eigen::Index>(arm)]; }

}  // namespace

Environment::Environment(EnvironmentVariant variant) : variant_(std::move(variant)) {
    std::visit(
        overloaded{
            [&](const Cascading& c) {
                if (c.m < 1 || c.K < 1 || c.K > c.m) {
                    throw std::invalid_argument("cascading: need 1 <= K <= m");
                }
                arm_count_ = c.m;
                max_triggered_ = c.K;
            },
            [&](const Pmc& p) {
                if (p.servers < 1 || p.users < 1) throw std::invalid_argument("pmc: empty side");
                if (p.budget < 1 || p.budget > p.servers) {
                    throw std::invalid_argument("pmc: budget must be in [1, |U|]");
                }
                check_edges(p.edges, p.servers, p.users, "pmc");
                server_edges_.assign(static_cast<std::size_t>(p.servers), {});
                user_edges_.assign(static_cast<std::size_t>(p.users), {});
                for (int e = 0; e < static_cast<int>(p.edges.size()); ++e) {
                    server_edges_[static_cast<std::size_t>(p.edges[static_cast<std::size_t>(e)].first)].push_back(e);
                    user_edges_[static_cast<std::size_t>(p.edges[static_cast<std::size_t>(e)].second)].push_back(e);
                }
                arm_count_ = static_cast<int>(p.edges.size()) + (p.user_triggering ? p.users : 0);
                std::vector<int> degrees;
                for (const auto& s : server_edges_) degrees.push_back(static_cast<int>(s.size()));
                std::sort(degrees.rbegin(), degrees.rend());
                max_triggered_ = std::accumulate(degrees.begin(), degrees.begin() + p.budget, 0) +
                                 (p.user_triggering ? p.users : 0);
            },
            [&](const Matching& mt) {
                if (mt.left < 1 || mt.left > mt.right) {
                    throw std::invalid_argument("matching: need 1 <= |U| <= |V|");
                }
                check_edges(mt.pairs, mt.left, mt.right, "matching");
                arm_count_ = static_cast<int>(mt.pairs.size());
                max_triggered_ = mt.left;
            },
            [&](const Routing& r) {
                if (r.nodes < 2) throw std::invalid_argument("routing: need >= 2 nodes");
                if (r.source < 0 || r.source >= r.nodes || r.dest < 0 || r.dest >= r.nodes ||
                    r.source == r.dest) {
                    throw std::invalid_argument("routing: bad source/destination");
                }
                check_edges(r.edges, r.nodes, r.nodes, "routing");
                arm_count_ = static_cast<int>(r.edges.size());
                max_triggered_ = std::min(arm_count_, r.nodes - 1);
            },
        },
        variant_);
    if (arm_count_ < 1) throw std::invalid_argument("environment has no base arms");
    small_actions_ = enumerate_actions(kSmallActionSet);
    if (small_actions_ && small_actions_->empty()) {
        throw std::invalid_argument(name() + ": no feasible action");
    }
}

std::string Environment::name() const {
    return std::visit(overloaded{[](const Cascading&) { return std::string("cascading"); },
                                 [](const Pmc&) { return std::string("pmc"); },
                                 [](const Matching&) { return std::string("matching"); },
                                 [](const Routing&) { return std::string("routing"); }},
                      variant_);
}

void Environment::validate(const Action& action) const {
    const auto& items = action.items;
    std::visit(
        overloaded{
            [&](const Cascading& c) {
                if (static_cast<int>(items.size()) != c.K) infeasible("cascading list must have K items");
                std::set<int> seen;
                for (int i : items) {
                    if (i < 0 || i >= c.m) infeasible("item out of range");
                    if (!seen.insert(i).second) infeasible("repeated item");
                }
            },
            [&](const Pmc& p) {
                if (static_cast<int>(items.size()) != p.budget) infeasible("pmc needs exactly k servers");
                for (std::size_t j = 0; j < items.size(); ++j) {
                    if (items[j] < 0 || items[j] >= p.servers) infeasible("server out of range");
                    if (j > 0 && items[j] <= items[j - 1]) infeasible("servers must be strictly increasing");
                }
            },
            [&](const Matching& mt) {
                if (static_cast<int>(items.size()) != mt.left) infeasible("matching must cover every left node");
                std::set<int> right_used;
                for (std::size_t j = 0; j < items.size(); ++j) {
                    const int arm = items[j];
                    if (arm < 0 || arm >= static_cast<int>(mt.pairs.size())) infeasible("pair out of range");
                    const auto [u, v] = mt.pairs[static_cast<std::size_t>(arm)];
                    if (u != static_cast<int>(j)) infeasible("pairs must be ordered by left node");
                    if (!right_used.insert(v).second) infeasible("right node used twice");
                }
            },
            [&](const Routing& r) {
                if (items.empty()) infeasible("empty path");
                int at_node = r.source;
                std::set<int> visited{r.source};
                for (int e : items) {
                    if (e < 0 || e >= static_cast<int>(r.edges.size())) infeasible("edge out of range");
                    const auto [from, to] = r.edges[static_cast<std::size_t>(e)];
                    if (from != at_node) infeasible("path is not contiguous");
                    if (!visited.insert(to).second) infeasible("path revisits a node");
                    at_node = to;
                }
                if (at_node != r.dest) infeasible("path does not end at destination");
            },
        },
        variant_);
}

std::vector<int> Environment::support(const Action& action) const {
    if (const auto* p = std::get_if<Pmc>(&variant_)) {
        std::vector<int> arms;
        std::set<int> users;
        for (int s : action.items) {
            for (int e : server_edges_[static_cast<std::size_t>(s)]) {
                arms.push_back(e);
                users.insert(p->edges[static_cast<std::size_t>(e)].second);
            }
        }
        std::sort(arms.begin(), arms.end());
        if (p->user_triggering) {
            for (int v : users) arms.push_back(static_cast<int>(p->edges.size()) + v);
        }
        return arms;
    }
    return action.items;
}

std::optional<std::vector<Action>> Environment::enumerate_actions(std::size_t limit) const {
    std::vector<Action> out;
    bool overflow = false;
    std::visit(
        overloaded{
            [&](const Cascading& c) {
                if (binomial_capped(c.m, c.K, limit) > limit) {
                    overflow = true;
                    return;
                }
                for_each_combination(c.m, c.K, [&](const std::vector<int>& idx) { out.push_back({idx}); });
            },
            [&](const Pmc& p) {
                if (binomial_capped(p.servers, p.budget, limit) > limit) {
                    overflow = true;
                    return;
                }
                for_each_combination(p.servers, p.budget,
                                     [&](const std::vector<int>& idx) { out.push_back({idx}); });
            },
            [&](const Matching& mt) {
                std::vector<std::vector<int>> by_left(static_cast<std::size_t>(mt.left));
                for (int a = 0; a < static_cast<int>(mt.pairs.size()); ++a) {
                    by_left[static_cast<std::size_t>(mt.pairs[static_cast<std::size_t>(a)].first)].push_back(a);
                }
                std::vector<int> chosen;
                std::vector<char> used(static_cast<std::size_t>(mt.right), 0);
                std::function<void(int)> dfs = [&](int u) {
                    if (overflow) return;
                    if (u == mt.left) {
                        if (out.size() >= limit) {
                            overflow = true;
                            return;
                        }
                        out.push_back({chosen});
                        return;
                    }
                    for (int a : by_left[static_cast<std::size_t>(u)]) {
                        const int v = mt.pairs[static_cast<std::size_t>(a)].second;
                        if (used[static_cast<std::size_t>(v)]) continue;
                        used[static_cast<std::size_t>(v)] = 1;
                        chosen.push_back(a);
                        dfs(u + 1);
                        chosen.pop_back();
                        used[static_cast<std::size_t>(v)] = 0;
                    }
                };
                dfs(0);
            },
            [&](const Routing& r) {
                std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(r.nodes));
                for (int e = 0; e < static_cast<int>(r.edges.size()); ++e) {
                    out_edges[static_cast<std::size_t>(r.edges[static_cast<std::size_t>(e)].first)].push_back(e);
                }
                std::vector<int> path;
                std::vector<char> visited(static_cast<std::size_t>(r.nodes), 0);
                visited[static_cast<std::size_t>(r.source)] = 1;
                std::function<void(int)> dfs = [&](int node) {
                    if (overflow) return;
                    if (node == r.dest) {
                        if (out.size() >= limit) {
                            overflow = true;
                            return;
                        }
                        out.push_back({path});
                        return;
                    }
                    for (int e : out_edges[static_cast<std::size_t>(node)]) {
                        const int next = r.edges[static_cast<std::size_t>(e)].second;
                        if (visited[static_cast<std::size_t>(next)]) continue;
                        visited[static_cast<std::size_t>(next)] = 1;
                        path.push_back(e);
                        dfs(next);
                        path.pop_back();
                        visited[static_cast<std::size_t>(next)] = 0;
                    }
                };
                dfs(r.source);
            },
        },
        variant_);
    if (overflow) return std::nullopt;
    return out;
}

Feedback trigger_and_observe(const Environment& env, const Action& action,
                             const Outcomes& outcomes) {
    env.validate(action);
    if (static_cast<int>(outcomes.size()) != env.arm_count()) {
        throw std::invalid_argument("trigger_and_observe: outcome vector has wrong length");
    }
    Feedback fb;
    auto trigger = [&](int arm) {
        fb.triggered.push_back(arm);
        fb.outcomes.push_back(outcomes[static_cast<std::size_t>(arm)]);
        return outcomes[static_cast<std::size_t>(arm)] != 0;
    };
    std::visit(
        overloaded{
            [&](const Cascading&) {
                for (int item : action.items) {
                    if (trigger(item)) {
                        fb.realized_reward = 1.0;
                        break;
                    }
                }
            },
            [&](const Routing&) {
                fb.realized_reward = 1.0;
                for (int e : action.items) {
                    if (!trigger(e)) {
                        fb.realized_reward = 0.0;
                        break;
                    }
                }
            },
            [&](const Matching&) {
                for (int a : action.items) fb.realized_reward += trigger(a) ? 1.0 : 0.0;
            },
            [&](const Pmc& p) {
                std::vector<char> covered(static_cast<std::size_t>(p.users), 0);
                for (int s : action.items) {
                    for (int e : env.server_edges()[static_cast<std::size_t>(s)]) {
                        if (trigger(e)) covered[static_cast<std::size_t>(p.edges[static_cast<std::size_t>(e)].second)] = 1;
                    }
                }
                for (int v = 0; v < p.users; ++v) {
                    if (!covered[static_cast<std::size_t>(v)]) continue;
                    if (p.user_triggering) {
                        fb.realized_reward += trigger(static_cast<int>(p.edges.size()) + v) ? 1.0 : 0.0;
                    } else {
                        fb.realized_reward += 1.0;
                    }
                }
            },
        },
        env.variant());
    return fb;
}

namespace {

// 1 - prod over selected edges into v of (1 - mu_e)
double coverage_prob(const Environment& env, const Pmc& p, const Action& action, int user,
                     const Vector& mu) {
    double miss = 1.0;
    for (int e : env.user_edges()[static_cast<std::size_t>(user)]) {
        const int server = p.edges[static_cast<std::size_t>(e)].first;
        if (std::binary_search(action.items.begin(), action.items.end(), server)) {
            miss *= 1.0 - at(mu, e);
        }
    }
    return 1.0 - miss;
}

}  // namespace

double expected_reward(const Environment& env, const Action& action, const Vector& mu) {
    if (mu.size() != env.arm_count()) throw std::invalid_argument("expected_reward: mu has wrong length");
    return std::visit(
        overloaded{
            [&](const Cascading&) {
                double miss = 1.0;
                for (int i : action.items) miss *= 1.0 - at(mu, i);
                return 1.0 - miss;
            },
            [&](const Routing&) {
                double prod = 1.0;
                for (int e : action.items) prod *= at(mu, e);
                return prod;
            },
            [&](const Matching&) {
                double sum = 0.0;
                for (int a : action.items) sum += at(mu, a);
                return sum;
            },
            [&](const Pmc& p) {
                double sum = 0.0;
                for (int v = 0; v < p.users; ++v) {
                    const double consume =
                        p.user_triggering ? at(mu, static_cast<int>(p.edges.size()) + v) : 1.0;
                    sum += consume * coverage_prob(env, p, action, v, mu);
                }
                return sum;
            },
        },
        env.variant());
}

double triggering_prob(const Environment& env, int arm, const Action& action, const Vector& mu) {
    if (arm < 0 || arm >= env.arm_count()) throw std::invalid_argument("triggering_prob: arm out of range");
    return std::visit(
        overloaded{
            [&](const Cascading&) {
                double survive = 1.0;
                for (int i : action.items) {
                    if (i == arm) return survive;
                    survive *= 1.0 - at(mu, i);
                }
                return 0.0;
            },
            [&](const Routing&) {
                double survive = 1.0;
                for (int e : action.items) {
                    if (e == arm) return survive;
                    survive *= at(mu, e);
                }
                return 0.0;
            },
            [&](const Matching&) {
                return std::find(action.items.begin(), action.items.end(), arm) != action.items.end()
                           ? 1.0
                           : 0.0;
            },
            [&](const Pmc& p) {
                const int edge_count = static_cast<int>(p.edges.size());
                if (arm < edge_count) {
                    const int server = p.edges[static_cast<std::size_t>(arm)].first;
                    return std::binary_search(action.items.begin(), action.items.end(), server) ? 1.0
                                                                                                : 0.0;
                }
                return coverage_prob(env, p, action, arm - edge_count, mu);
            },
        },
        env.variant());
}

SmoothnessCoefficients smoothness_coefficients(const Environment& env) {
    return std::visit(
        overloaded{
            [](const Cascading&) { return SmoothnessCoefficients{1.0, 1.0, 1.0}; },
            [](const Routing&) { return SmoothnessCoefficients{1.0, 1.0, 1.0}; },
            [](const Matching&) { return SmoothnessCoefficients{std::nullopt, 1.0, std::nullopt}; },
            [](const Pmc& p) {
                return SmoothnessCoefficients{3.0 * std::sqrt(2.0 * p.users), 1.0, 2.0};
            },
        },
        env.variant());
}

double tpm_bound(const Environment& env, const Action& action, const Vector& mu, const Vector& mu_prime) {
    double sum = 0.0;
    for (int i : env.support(action)) {
        sum += triggering_prob(env, i, action, mu) * std::abs(at(mu, i) - at(mu_prime, i));
    }
    return smoothness_coefficients(env).B_1 * sum;
}

std::optional<double> tpvm_bound(const Environment& env, const Action& action, const Vector& mu,
                                 const Vector& mu_prime) {
    const auto c = smoothness_coefficients(env);
    if (!c.B_v) return std::nullopt;
    double sum = 0.0;
    for (int i : env.support(action)) {
        const double m = at(mu, i);
        if (!(m > 0.0 && m < 1.0)) throw std::invalid_argument("tpvm_bound: mu must lie in (0,1)");
        const double z = at(mu_prime, i) - m;
        sum += std::pow(triggering_prob(env, i, action, mu), *c.lambda) * z * z / ((1.0 - m) * m);
    }
    return *c.B_v * std::sqrt(sum);
}

Vector clip_to_unit_ball(Vector x) {
    const double n = x.norm();
    if (n > 1.0) x /= n;
    return x;
}

namespace {

FeatureMap random_features(Rng& rng, int m, int d) {
    FeatureMap f(m, d);
    for (int i = 0; i < m; ++i) {
        Vector row(d);
        for (int j = 0; j < d; ++j) row[j] = uniform(rng, -1.0, 1.0);
        f.row(i) = clip_to_unit_ball(std::move(row)).transpose();
    }
    return f;
}

}  // namespace

GroundTruth::GroundTruth(Vector theta_star, FeatureMap static_map)
    : theta_star_(std::move(theta_star)), static_map_(std::move(static_map)),
      m_(static_cast<int>(static_map_.rows())) {
    if (static_map_.cols() != theta_star_.size()) {
        throw std::invalid_argument("GroundTruth: feature dimension mismatch");
    }
    for (Eigen::Index i = 0; i < static_map_.rows(); ++i) {
        if (static_map_.row(i).squaredNorm() > 1.0 + 1e-9) {
            throw std::invalid_argument("GroundTruth: feature outside the unit ball");
        }
    }
}

GroundTruth::GroundTruth(Vector theta_star, std::uint64_t generator_seed, int m, int d)
    : theta_star_(std::move(theta_star)), generator_seed_(generator_seed), m_(m) {
    if (theta_star_.size() != d) throw std::invalid_argument("GroundTruth: dimension mismatch");
}

FeatureMap GroundTruth::feature_map(long t) const {
    if (!generator_seed_) return static_map_;
    Rng rng(mix_seed(*generator_seed_, static_cast<std::uint64_t>(t)));
    return random_features(rng, m_, dim());
}

Vector GroundTruth::means(const FeatureMap& features) const {
    const Vector z = features * theta_star_;
    return z.unaryExpr([](double x) { return sigmoid(x); });
}

Outcomes sample_outcomes(const GroundTruth& truth, const FeatureMap& features, Rng& rng) {
    const Vector mu = truth.means(features);
    Outcomes x(static_cast<std::size_t>(mu.size()));
    for (Eigen::Index i = 0; i < mu.size(); ++i) x[static_cast<std::size_t>(i)] = bernoulli(rng, mu[i]) ? 1 : 0;
    return x;
}

std::string to_string(VariantKind kind) {
    switch (kind) {
        case VariantKind::cascading: return "cascading";
        case VariantKind::pmc: return "pmc";
        case VariantKind::matching: return "matching";
        case VariantKind::routing: return "routing";
    }
    return "?";
}

VariantKind parse_variant(const std::string& name) {
    if (name == "cascading") return VariantKind::cascading;
    if (name == "pmc") return VariantKind::pmc;
    if (name == "matching") return VariantKind::matching;
    if (name == "routing") return VariantKind::routing;
    throw std::invalid_argument("unknown variant '" + name + "'");
}

Instance synth_instance(const InstanceSpec& spec) {
    if (spec.d < 1) throw std::invalid_argument("synth_instance: d must be >= 1");
    if (!(spec.L > 0.0)) throw std::invalid_argument("synth_instance: L must be positive");
    Rng rng(spec.seed);

    Vector theta(spec.d);
    for (int j = 0; j < spec.d; ++j) theta[j] = uniform(rng, -1.0, 1.0);
    if (theta.norm() > spec.L) theta *= spec.L / theta.norm();

    auto edges_or = [&](auto&& generate) {
        return spec.edges ? *spec.edges : generate();
    };

    EnvironmentVariant variant;
    switch (spec.variant) {
        case VariantKind::cascading:
            variant = Cascading{spec.m, spec.K};
            break;
        case VariantKind::pmc: {
            auto edges = edges_or([&] {
                std::vector<Edge> e;
                for (int v = 0; v < spec.users; ++v) {
                    bool any = false;
                    for (int u = 0; u < spec.servers; ++u) {
                        if (bernoulli(rng, spec.edge_prob)) {
                            e.emplace_back(u, v);
                            any = true;
                        }
                    }
                    if (!any) e.emplace_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.servers))), v);
                }
                std::sort(e.begin(), e.end());
                return e;
            });
            variant = Pmc{spec.servers, spec.users, std::move(edges), spec.budget, spec.user_triggering};
            break;
        }
        case VariantKind::matching: {
            auto pairs = edges_or([&] {
                std::vector<int> perm(static_cast<std::size_t>(spec.right));
                std::iota(perm.begin(), perm.end(), 0);
                for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
                std::set<Edge> e;
                for (int u = 0; u < spec.left; ++u) {
                    e.emplace(u, perm[static_cast<std::size_t>(u)]);
                    for (int v = 0; v < spec.right; ++v) {
                        if (bernoulli(rng, spec.edge_prob)) e.emplace(u, v);
                    }
                }
                return std::vector<Edge>(e.begin(), e.end());
            });
            variant = Matching{spec.left, spec.right, std::move(pairs)};
            break;
        }
        case VariantKind::routing: {
            auto edges = edges_or([&] {
                std::vector<Edge> e;
                for (int i = 0; i < spec.nodes; ++i) {
                    for (int j = i + 1; j < spec.nodes; ++j) {
                        if (j == i + 1 || bernoulli(rng, spec.edge_prob)) e.emplace_back(i, j);
                    }
                }
                return e;
            });
            const int dest = spec.dest < 0 ? spec.nodes - 1 : spec.dest;
            variant = Routing{spec.nodes, std::move(edges), spec.source, dest};
            break;
        }
    }
    Environment env(std::move(variant));
    const int m = env.arm_count();
    if (spec.time_varying) {
        return Instance{GroundTruth(std::move(theta), mix_seed(spec.seed, 0xfea7u), m, spec.d),
                        std::move(env)};
    }
    FeatureMap features = random_features(rng, m, spec.d);
    return Instance{GroundTruth(std::move(theta), std::move(features)), std::move(env)};
}

}  // namespace clogb
