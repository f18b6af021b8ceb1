#include "clogb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <variant>

namespace clogb {

namespace {

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

}  // namespace

OracleResult topk_oracle(const Vector& mu, int K, const Environment* env) {
    const int m = static_cast<int>(mu.size());
    if (K < 1 || K > m) throw std::invalid_argument("topk_oracle: need 1 <= K <= m");
    std::vector<int> order(idx(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return mu[a] > mu[b]; });
    order.resize(idx(K));

    OracleResult r;
    r.action.items = std::move(order);
    if (env) {
        r.value = expected_reward(*env, r.action, mu);
    } else {
        double miss = 1.0;
        for (int i : r.action.items) miss *= 1.0 - mu[i];
        r.value = 1.0 - miss;
    }
    r.alpha = 1.0;
    return r;
}

OracleResult greedy_pmc(const Vector& mu, const Environment& env, int k, bool lazy) {
    const auto* pmc = std::get_if<Pmc>(&env.variant());
    if (!pmc) throw std::invalid_argument("greedy_pmc: environment is not PMC");
    if (k < 1 || k > pmc->servers) throw std::invalid_argument("greedy_pmc: need 1 <= k <= |U|");

    auto value_of = [&](std::vector<int> servers) {
        std::sort(servers.begin(), servers.end());
        return expected_reward(env, Action{std::move(servers)}, mu);
    };

    std::vector<int> chosen;
    double current = 0.0;
    if (!lazy) {
        std::vector<char> in_set(idx(pmc->servers), 0);
        for (int step = 0; step < k; ++step) {
            int best = -1;
            double best_gain = -std::numeric_limits<double>::infinity();
            for (int s = 0; s < pmc->servers; ++s) {
                if (in_set[idx(s)]) continue;
                auto trial = chosen;
                trial.push_back(s);
                const double gain = value_of(trial) - current;
                if (gain > best_gain) {
                    best_gain = gain;
                    best = s;
                }
            }
            in_set[idx(best)] = 1;
            chosen.push_back(best);
            current += best_gain;
        }
    } else {
        // (gain upper bound, -server, round evaluated); submodularity makes stale gains upper bounds.
        using Entry = std::tuple<double, int, int>;
        std::priority_queue<Entry> heap;
        for (int s = 0; s < pmc->servers; ++s) heap.emplace(value_of({s}), -s, 0);
        for (int step = 0; step < k; ++step) {
            for (;;) {
                auto [gain, neg_s, evaluated] = heap.top();
                heap.pop();
                if (evaluated == step) {
                    chosen.push_back(-neg_s);
                    current += gain;
                    break;
                }
                auto trial = chosen;
                trial.push_back(-neg_s);
                heap.emplace(value_of(trial) - current, neg_s, step);
            }
        }
    }
    std::sort(chosen.begin(), chosen.end());
    OracleResult r;
    r.action.items = std::move(chosen);
    r.value = expected_reward(env, r.action, mu);
    r.alpha = kOneMinusInvE;
    return r;
}

Assignment hungarian(const Matrix& weights) {
    const int n = static_cast<int>(weights.rows());
    const int m = static_cast<int>(weights.cols());
    if (n < 1 || n > m) throw std::invalid_argument("hungarian: need 1 <= rows <= cols");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        bool any = false;
        for (int j = 0; j < m; ++j) {
            const double w = weights(i, j);
            if (w == kForbidden) continue;
            if (!std::isfinite(w)) throw std::invalid_argument("hungarian: non-finite weight");
            any = true;
            lo = std::min(lo, w);
            hi = std::max(hi, w);
        }
        if (!any) throw std::runtime_error("hungarian: row has no allowed column");
    }
    // Minimize cost = hi - w; forbidden entries cost more than any allowed perfect matching.
    const double forbidden_cost = (hi - lo + 1.0) * (n + 1);
    auto cost = [&](int i, int j) {
        const double w = weights(i, j);
        return w == kForbidden ? forbidden_cost : hi - w;
    };

    // Shortest augmenting path with potentials; rows and columns are 1-based, 0 is a sentinel.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(idx(n + 1), 0.0), v(idx(m + 1), 0.0);
    std::vector<int> p(idx(m + 1), 0), way(idx(m + 1), 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(idx(m + 1), inf);
        std::vector<char> used(idx(m + 1), 0);
        do {
            used[idx(j0)] = 1;
            const int i0 = p[idx(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[idx(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[idx(i0)] - v[idx(j)];
                if (cur < minv[idx(j)]) {
                    minv[idx(j)] = cur;
                    way[idx(j)] = j0;
                }
                if (minv[idx(j)] < delta) {
                    delta = minv[idx(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[idx(j)]) {
                    u[idx(p[idx(j)])] += delta;
                    v[idx(j)] -= delta;
                } else {
                    minv[idx(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[idx(j0)] != 0);
        do {
            const int j1 = way[idx(j0)];
            p[idx(j0)] = p[idx(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    Assignment a;
    a.right_of_left.assign(idx(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (p[idx(j)] != 0) a.right_of_left[idx(p[idx(j)] - 1)] = j - 1;
    }
    for (int i = 0; i < n; ++i) {
        const double w = weights(i, a.right_of_left[idx(i)]);
        if (w == kForbidden) throw std::runtime_error("hungarian: no feasible perfect matching");
        a.value += w;
    }
    return a;
}

OracleResult matching_oracle(const Vector& mu, const Environment& env) {
    const auto* mt = std::get_if<Matching>(&env.variant());
    if (!mt) throw std::invalid_argument("matching_oracle: environment is not matching");
    Matrix w = Matrix::Constant(mt->left, mt->right, kForbidden);
    std::vector<int> arm_of(idx(mt->left * mt->right), -1);
    for (int a = 0; a < static_cast<int>(mt->pairs.size()); ++a) {
        const auto [l, r] = mt->pairs[idx(a)];
        w(l, r) = mu[a];
        arm_of[idx(l * mt->right + r)] = a;
    }
    const Assignment asg = hungarian(w);
    OracleResult r;
    for (int l = 0; l < mt->left; ++l) r.action.items.push_back(arm_of[idx(l * mt->right + asg.right_of_left[idx(l)])]);
    r.value = expected_reward(env, r.action, mu);
    r.alpha = 1.0;
    return r;
}

OracleResult dijkstra_route(const Vector& mu, const Environment& env) {
    const auto* rt = std::get_if<Routing>(&env.variant());
    if (!rt) throw std::invalid_argument("dijkstra_route: environment is not routing");
    std::vector<std::vector<int>> out(idx(rt->nodes));
    for (int e = 0; e < static_cast<int>(rt->edges.size()); ++e) {
        if (mu[e] > 0.0) out[idx(rt->edges[idx(e)].first)].push_back(e);
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(idx(rt->nodes), inf);
    std::vector<int> via(idx(rt->nodes), -1);
    std::vector<char> done(idx(rt->nodes), 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[idx(rt->source)] = 0.0;
    pq.emplace(0.0, rt->source);
    while (!pq.empty()) {
        const auto [d, node] = pq.top();
        pq.pop();
        if (done[idx(node)]) continue;
        done[idx(node)] = 1;
        for (int e : out[idx(node)]) {
            const int next = rt->edges[idx(e)].second;
            const double nd = d - std::log(mu[e]);
            if (nd < dist[idx(next)]) {
                dist[idx(next)] = nd;
                via[idx(next)] = e;
                pq.emplace(nd, next);
            }
        }
    }
    if (!std::isfinite(dist[idx(rt->dest)])) {
        throw std::runtime_error("dijkstra_route: destination unreachable");
    }
    OracleResult r;
    for (int node = rt->dest; node != rt->source;) {
        const int e = via[idx(node)];
        r.action.items.push_back(e);
        node = rt->edges[idx(e)].first;
    }
    std::reverse(r.action.items.begin(), r.action.items.end());
    r.value = expected_reward(env, r.action, mu);
    r.alpha = 1.0;
    return r;
}

OracleResult brute_force_oracle(const Environment& env, const Vector& mu, std::size_t limit) {
    const auto enumerated =
        limit <= Environment::kSmallActionSet && env.small_action_set()
            ? env.small_action_set()
            : env.enumerate_actions(limit);
    if (!enumerated) throw std::runtime_error("brute_force_oracle: action set too large");
    const auto& actions = *enumerated;
    if (actions.empty()) throw std::runtime_error("brute_force_oracle: no feasible action");
    OracleResult r;
    r.value = -std::numeric_limits<double>::infinity();
    for (const auto& a : actions) {
        const double v = expected_reward(env, a, mu);
        if (v > r.value) {
            r.value = v;
            r.action = a;
        }
    }
    r.alpha = 1.0;
    return r;
}

OracleResult solve(const Environment& env, const Vector& mu, bool lazy_greedy) {
    return std::visit(
        [&](const auto& v) -> OracleResult {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cascading>) {
                return topk_oracle(mu, v.K, &env);
            } else if constexpr (std::is_same_v<T, Pmc>) {
                return greedy_pmc(mu, env, v.budget, lazy_greedy);
            } else if constexpr (std::is_same_v<T, Matching>) {
                return matching_oracle(mu, env);
            } else {
                return dijkstra_route(mu, env);
            }
        },
        env.variant());
}

double oracle_alpha(const Environment& env) {
    return std::holds_alternative<Pmc>(env.variant()) ? kOneMinusInvE : 1.0;
}

Action random_action(const Environment& env, Rng& rng) {
    if (const auto& small = env.small_action_set()) {
        return (*small)[uniform_index(rng, small->size())];
    }
    if (const auto* c = std::get_if<Cascading>(&env.variant())) {
        std::vector<int> items(idx(c->m));
        std::iota(items.begin(), items.end(), 0);
        for (int i = 0; i < c->K; ++i) {
            const std::size_t j = idx(i) + uniform_index(rng, idx(c->m - i));
            std::swap(items[idx(i)], items[j]);
        }
        items.resize(idx(c->K));
        return {items};
    }
    if (const auto* p = std::get_if<Pmc>(&env.variant())) {
        std::vector<int> servers(idx(p->servers));
        std::iota(servers.begin(), servers.end(), 0);
        for (int i = 0; i < p->budget; ++i) {
            const std::size_t j = idx(i) + uniform_index(rng, idx(p->servers - i));
            std::swap(servers[idx(i)], servers[j]);
        }
        servers.resize(idx(p->budget));
        std::sort(servers.begin(), servers.end());
        return {servers};
    }
    Vector weights(env.arm_count());
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights[i] = 1.0 - uniform01(rng);
    return solve(env, weights).action;
}

Action action_containing(const Environment& env, int arm, const Vector& priority) {
    if (arm < 0 || arm >= env.arm_count()) throw std::invalid_argument("action_containing: bad arm");
    return std::visit(
        [&](const auto& v) -> Action {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cascading>) {
                Vector pr = priority;
                pr[arm] = std::numeric_limits<double>::infinity();
                return topk_oracle(pr, v.K).action;
            } else if constexpr (std::is_same_v<T, Pmc>) {
                const int edge_count = static_cast<int>(v.edges.size());
                int anchor = 0;
                if (arm < edge_count) {
                    anchor = v.edges[idx(arm)].first;
                } else {
                    // Server whose edge to this user has the highest priority.
                    double best = -std::numeric_limits<double>::infinity();
                    for (int e : env.user_edges()[idx(arm - edge_count)]) {
                        if (priority[e] > best) {
                            best = priority[e];
                            anchor = v.edges[idx(e)].first;
                        }
                    }
                }
                std::vector<double> score(idx(v.servers), 0.0);
                for (int s = 0; s < v.servers; ++s) {
                    for (int e : env.server_edges()[idx(s)]) score[idx(s)] += priority[e];
                }
                std::vector<int> order(idx(v.servers));
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](int a, int b) { return score[idx(a)] > score[idx(b)]; });
                std::vector<int> chosen{anchor};
                for (int s : order) {
                    if (static_cast<int>(chosen.size()) == v.budget) break;
                    if (s != anchor) chosen.push_back(s);
                }
                std::sort(chosen.begin(), chosen.end());
                return {chosen};
            } else if constexpr (std::is_same_v<T, Matching>) {
                const auto [l0, r0] = v.pairs[idx(arm)];
                Matrix w = Matrix::Constant(v.left, v.right, kForbidden);
                std::vector<int> arm_of(idx(v.left * v.right), -1);
                for (int a = 0; a < static_cast<int>(v.pairs.size()); ++a) {
                    const auto [l, r] = v.pairs[idx(a)];
                    arm_of[idx(l * v.right + r)] = a;
                    if ((l == l0) != (r == r0)) continue;  // row l0 / column r0 reserved for the pair
                    w(l, r) = priority[a];
                }
                const Assignment asg = hungarian(w);
                Action action;
                for (int l = 0; l < v.left; ++l) action.items.push_back(arm_of[idx(l * v.right + asg.right_of_left[idx(l)])]);
                return action;
            } else {
                // Fewest-hop path source -> from(arm) -> to(arm) -> dest.
                const auto [from, to] = v.edges[idx(arm)];
                auto bfs = [&](int start, int goal, const std::vector<char>& blocked) {
                    std::vector<int> via(idx(v.nodes), -2);
                    std::queue<int> q;
                    via[idx(start)] = -1;
                    q.push(start);
                    while (!q.empty()) {
                        const int node = q.front();
                        q.pop();
                        if (node == goal) break;
                        for (int e = 0; e < static_cast<int>(v.edges.size()); ++e) {
                            const auto [a, b] = v.edges[idx(e)];
                            if (a != node || blocked[idx(b)] || via[idx(b)] != -2) continue;
                            via[idx(b)] = e;
                            q.push(b);
                        }
                    }
                    std::vector<int> path;
                    if (via[idx(goal)] == -2) return std::optional<std::vector<int>>{};
                    for (int node = goal; node != start;) {
                        const int e = via[idx(node)];
                        path.push_back(e);
                        node = v.edges[idx(e)].first;
                    }
                    std::reverse(path.begin(), path.end());
                    return std::optional<std::vector<int>>{path};
                };
                std::vector<char> blocked(idx(v.nodes), 0);
                blocked[idx(to)] = 1;
                const auto head = bfs(v.source, from, blocked);
                if (head) {
                    std::fill(blocked.begin(), blocked.end(), 0);
                    blocked[idx(v.source)] = 1;
                    for (int e : *head) blocked[idx(v.edges[idx(e)].second)] = 1;
                    blocked[idx(from)] = 1;
                    const auto tail = to == v.dest ? std::optional<std::vector<int>>{std::vector<int>{}}
                                                   : bfs(to, v.dest, blocked);
                    if (tail && !(to != v.dest && blocked[idx(to)])) {
                        Action action{*head};
                        action.items.push_back(arm);
                        action.items.insert(action.items.end(), tail->begin(), tail->end());
                        return action;
                    }
                }
                // No simple path uses this edge; fall back to the best path by priority.
                Vector w = priority.cwiseMax(1e-12).cwiseMin(1.0);
                return dijkstra_route(w, env).action;
            }
        },
        env.variant());
}

}  // namespace clogb
