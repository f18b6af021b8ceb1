#include "clogb/config.hpp"
#include "clogb/crosscheck.hpp"
#include "clogb/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

clogb::ExperimentConfig load(const std::string& path, const std::map<std::string, std::string>& overrides) {
    if (!std::filesystem::is_regular_file(path)) throw UsageError("config file not found: " + path);
    try {
        return clogb::load_experiment(path, overrides);
    } catch (const clogb::ConfigError& e) {
        throw UsageError(e.what());
    }
}

void run_one(const clogb::ExperimentConfig& cfg) {
    const auto result = clogb::run_experiment(cfg);
    clogb::write_outputs(cfg, result);
    std::cout << "wrote " << cfg.out_dir << "/regret.csv\n" << clogb::format_summary(result);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Combinatorial logistic bandit simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, param;
    std::optional<int> seeds, threads;
    std::optional<std::uint64_t> master_seed;
    std::vector<std::string> values;
    int instances = 100;
    std::uint64_t check_seed = 2024;

    auto* run = app.add_subcommand("run", "Run an experiment and write regret.csv and summary.txt");
    run->add_option("--config", config_path, "Experiment config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    run->add_option("--master-seed", master_seed, "Master seed");
    run->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    auto* check = app.add_subcommand("check-oracles", "Cross-check every oracle against brute force");
    check->add_option("--instances", instances, "Random instances per oracle")->check(CLI::PositiveNumber);
    check->add_option("--seed", check_seed, "Corpus seed");

    auto* sweep = app.add_subcommand("sweep", "Run the experiment once per parameter value");
    sweep->add_option("--config", config_path, "Experiment config file")->required();
    sweep->add_option("--param", param, "Config key to vary, e.g. K")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
    sweep->add_option("--out", out_dir, "Base output directory (overrides the config)");
    sweep->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
    sweep->add_option("--master-seed", master_seed, "Master seed");
    sweep->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    std::map<std::string, std::string> overrides;
    if (seeds) overrides["seeds"] = std::to_string(*seeds);
    if (master_seed) overrides["master_seed"] = std::to_string(*master_seed);
    if (threads) overrides["threads"] = std::to_string(*threads);
    if (!out_dir.empty()) overrides["out"] = out_dir;

    try {
        if (*run) {
            run_one(load(config_path, overrides));
        } else if (*check) {
            bool ok = true;
            for (const auto& c : clogb::check_oracles(instances, check_seed)) {
                std::cout << (c.passed() ? "PASS " : "FAIL ") << c.oracle << " (" << c.instances << " instances";
                if (!c.passed()) std::cout << ", " << c.failures << " failures; " << c.first_failure;
                std::cout << ")\n";
                ok = ok && c.passed();
            }
            return ok ? 0 : kRuntime;
        } else if (*sweep) {
            const std::string base = load(config_path, overrides).out_dir;
            for (const auto& v : values) {
                auto o = overrides;
                o[param] = v;
                o["out"] = base + "_" + param + "-" + v;
                run_one(load(config_path, o));
            }
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return 0;
}
