#include "clogb/experiment.hpp"

#include "clogb/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace clogb {

std::uint64_t trial_seed(std::uint64_t master_seed, int seed_index) {
    return mix_seed(master_seed, static_cast<std::uint64_t>(seed_index));
}

OptimumMode default_optimum_mode(const Environment& env) {
    if (env.arm_count() > 20) return OptimumMode::oracle_proxy;
    if (env.small_action_set()) return OptimumMode::brute_force;
    return env.enumerate_actions(1000000) ? OptimumMode::brute_force : OptimumMode::oracle_proxy;
}

Instance experiment_instance(const ExperimentConfig& cfg, int seed_index) {
    InstanceSpec spec = cfg.instance;
    if (cfg.vary_instance) spec.seed = mix_seed(trial_seed(cfg.master_seed, seed_index), 3);
    return synth_instance(spec);
}

namespace {

double max_row_norm(const GroundTruth& truth) {
    if (!truth.is_static()) return 1.0;
    return truth.feature_map(1).rowwise().norm().maxCoeff();
}

OptimumMode resolve_mode(const ExperimentConfig& cfg, const Environment& env) {
    const OptimumMode mode = cfg.optimum_mode ? *cfg.optimum_mode : default_optimum_mode(env);
    if (mode == OptimumMode::brute_force && !env.small_action_set() && !env.enumerate_actions(1000000)) {
        throw ConfigError("optimum_mode = brute_force needs at most 1e6 feasible actions");
    }
    return mode;
}

double optimum_value(const Environment& env, const Vector& mu, OptimumMode mode) {
    return mode == OptimumMode::brute_force ? brute_force_oracle(env, mu).value : solve(env, mu).value;
}

std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

}  // namespace

RegretTrace run_trial(const ExperimentConfig& cfg, const AlgoConfig& algo, int seed_index) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = trial_seed(cfg.master_seed, seed_index);
    const Instance inst = experiment_instance(cfg, seed_index);
    const Environment& env = inst.env;
    const GroundTruth& truth = inst.truth;
    const OptimumMode mode = resolve_mode(cfg, env);
    const double alpha = oracle_alpha(env);

    PolicyContext ctx;
    ctx.env = &env;
    ctx.horizon = cfg.T;
    ctx.static_features = truth.is_static();
    ctx.seed = mix_seed(seed, 2);
    ctx.params = resolve_params(algo, env, cfg.instance.L, truth.dim(), max_row_norm(truth), cfg.T);
    auto policy = make_policy(algo, ctx);

    Rng env_rng(mix_seed(seed, 1));
    RegretTrace trace;
    trace.algorithm = to_string(algo.kind);
    trace.seed = seed_index;
    trace.inst_regret.reserve(static_cast<std::size_t>(cfg.T));
    trace.cum_regret.reserve(static_cast<std::size_t>(cfg.T));

    std::optional<double> static_opt;
    double cum = 0.0;
    for (long t = 1; t <= cfg.T; ++t) {
        const RoundRecord rec = play_round(*policy, env, truth, t, env_rng);
        double opt = 0.0;
        if (truth.is_static()) {
            if (!static_opt) static_opt = optimum_value(env, rec.true_means, mode);
            opt = *static_opt;
        } else {
            opt = optimum_value(env, rec.true_means, mode);
        }
        const double inst_regret = alpha * opt - expected_reward(env, rec.action, rec.true_means);
        cum += inst_regret;
        trace.inst_regret.push_back(inst_regret);
        trace.cum_regret.push_back(cum);
    }
    trace.potential_violations = policy->potential_violations();
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

std::vector<AlgorithmSummary> summarize(const std::vector<RegretTrace>& traces) {
    std::vector<AlgorithmSummary> out;
    for (const auto& tr : traces) {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const AlgorithmSummary& s) { return s.algorithm == tr.algorithm; });
        if (it == out.end()) {
            out.push_back({tr.algorithm, 0.0, 0.0, 0.0, 0});
        }
    }
    for (auto& s : out) {
        std::vector<double> finals;
        double wall = 0.0;
        for (const auto& tr : traces) {
            if (tr.algorithm != s.algorithm) continue;
            finals.push_back(tr.cum_regret.empty() ? 0.0 : tr.cum_regret.back());
            wall += tr.wall_seconds;
            s.potential_violations += tr.potential_violations;
        }
        const double n = static_cast<double>(finals.size());
        double sum = 0.0;
        for (double f : finals) sum += f;
        s.mean_final = sum / n;
        double ss = 0.0;
        for (double f : finals) ss += (f - s.mean_final) * (f - s.mean_final);
        s.std_final = finals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        s.mean_wall_seconds = wall / n;
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    {
        const Instance probe = experiment_instance(cfg, 0);
        result.optimum_mode = resolve_mode(cfg, probe.env);
        result.alpha = oracle_alpha(probe.env);
        if (cfg.instance.variant == VariantKind::pmc && result.optimum_mode == OptimumMode::oracle_proxy) {
            result.caveat = "PMC regret is alpha-approximate against the greedy solution, not the exact optimum.";
        }
    }

    const std::size_t n_algo = cfg.algorithms.size();
    const std::size_t n_tasks = n_algo * static_cast<std::size_t>(cfg.seeds);
    result.traces.resize(n_tasks);

    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_tasks)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            try {
                result.traces[i] = run_trial(cfg, cfg.algorithms[i / static_cast<std::size_t>(cfg.seeds)],
                                             static_cast<int>(i % static_cast<std::size_t>(cfg.seeds)));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n_tasks;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    result.summary = summarize(result.traces);
    return result;
}

std::string format_csv(const std::vector<RegretTrace>& traces) {
    std::string out = "round,algorithm,seed,inst_regret,cum_regret\n";
    for (const auto& tr : traces) {
        for (std::size_t r = 0; r < tr.inst_regret.size(); ++r) {
            out += std::to_string(r + 1);
            out += ',';
            out += tr.algorithm;
            out += ',';
            out += std::to_string(tr.seed);
            out += ',';
            out += format_double(tr.inst_regret[r]);
            out += ',';
            out += format_double(tr.cum_regret[r]);
            out += '\n';
        }
    }
    return out;
}

void emit_csv(const std::vector<RegretTrace>& traces, const std::string& path) {
    if (traces.empty()) throw std::invalid_argument("emit_csv: no traces");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << format_csv(traces);
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RegretTrace> parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "round,algorithm,seed,inst_regret,cum_regret") {
        throw std::runtime_error("csv: bad header");
    }
    std::vector<RegretTrace> traces;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 5) throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected 5 fields");
        auto num = [&](const std::string& s, auto& v) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) {
                throw std::runtime_error("csv line " + std::to_string(lineno) + ": bad number '" + s + "'");
            }
        };
        long round = 0;
        int seed = 0;
        double inst = 0.0, cum = 0.0;
        num(f[0], round);
        num(f[2], seed);
        num(f[3], inst);
        num(f[4], cum);
        if (traces.empty() || traces.back().algorithm != f[1] || traces.back().seed != seed) {
            traces.push_back({});
            traces.back().algorithm = f[1];
            traces.back().seed = seed;
        }
        auto& tr = traces.back();
        if (round != static_cast<long>(tr.inst_regret.size()) + 1) {
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": rounds out of order");
        }
        tr.inst_regret.push_back(inst);
        tr.cum_regret.push_back(cum);
    }
    return traces;
}

std::vector<RegretTrace> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

std::string format_summary(const ExperimentResult& result) {
    std::ostringstream os;
    os << "optimum_mode: " << to_string(result.optimum_mode) << "\n";
    os << "alpha: " << std::setprecision(6) << result.alpha << "\n";
    if (!result.caveat.empty()) os << "note: " << result.caveat << "\n";
    os << "\n" << std::left << std::setw(16) << "algorithm" << std::right << std::setw(14) << "mean_regret"
       << std::setw(12) << "std" << std::setw(12) << "wall_s" << std::setw(12) << "pot_viol" << "\n";
    os << std::fixed;
    for (const auto& s : result.summary) {
        os << std::left << std::setw(16) << s.algorithm << std::right << std::setprecision(3)
           << std::setw(14) << s.mean_final << std::setw(12) << s.std_final << std::setw(12)
           << s.mean_wall_seconds << std::setw(12) << s.potential_violations << "\n";
    }
    return os.str();
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    emit_csv(result.traces, (dir / "regret.csv").string());
    std::ofstream out(dir / "summary.txt");
    if (!out) throw std::runtime_error("cannot write summary in " + cfg.out_dir);
    out << format_summary(result);
}

}  // namespace clogb
