#pragma once

#include "clogb/config.hpp"

#include <string>
#include <vector>

namespace clogb {

struct RegretTrace {
    std::string algorithm;
    int seed = 0;  // seed index within the experiment
    std::vector<double> inst_regret;
    std::vector<double> cum_regret;
    double wall_seconds = 0.0;
    long potential_violations = 0;
};

struct AlgorithmSummary {
    std::string algorithm;
    double mean_final = 0.0;
    double std_final = 0.0;  // sample standard deviation, 0 for one seed
    double mean_wall_seconds = 0.0;
    long potential_violations = 0;
};

struct ExperimentResult {
    std::vector<RegretTrace> traces;  // ordered by (algorithm, seed)
    std::vector<AlgorithmSummary> summary;
    OptimumMode optimum_mode = OptimumMode::brute_force;
    double alpha = 1.0;
    std::string caveat;
};

/// Seed of trial `seed_index`; instance, environment and policy streams derive from it.
std::uint64_t trial_seed(std::uint64_t master_seed, int seed_index);

/// brute_force for m <= 20 with at most 1e6 actions, oracle_proxy otherwise.
OptimumMode default_optimum_mode(const Environment& env);

Instance experiment_instance(const ExperimentConfig& cfg, int seed_index);

RegretTrace run_trial(const ExperimentConfig& cfg, const AlgoConfig& algo, int seed_index);

/// Runs every (algorithm, seed) pair on a bounded worker pool. Does not write files.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<AlgorithmSummary> summarize(const std::vector<RegretTrace>& traces);

/// CSV with header round,algorithm,seed,inst_regret,cum_regret; rows in input order.
void emit_csv(const std::vector<RegretTrace>& traces, const std::string& path);
std::string format_csv(const std::vector<RegretTrace>& traces);
std::vector<RegretTrace> parse_csv(const std::string& text);
std::vector<RegretTrace> read_csv(const std::string& path);

std::string format_summary(const ExperimentResult& result);

/// Writes regret.csv and summary.txt into cfg.out_dir (created if missing).
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace clogb
