#pragma once

#include "clogb/environment.hpp"
#include "clogb/policy.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace clogb {

/// Config and instance-file errors; what() carries "source:line: message".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KvEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Flat `key = value` text. '#' starts a comment, blank lines are ignored,
/// keys may repeat (the consumer decides whether that is allowed).
struct KvFile {
    std::string source;
    std::vector<KvEntry> entries;

    /// Replaces every entry for `key` with one synthetic entry (line 0), or appends it.
    void set(const std::string& key, const std::string& value);
};

KvFile parse_kv(const std::string& text, const std::string& source);
KvFile read_kv_file(const std::string& path);

enum class OptimumMode { brute_force, oracle_proxy };
std::string to_string(OptimumMode mode);

struct InstanceFile {
    InstanceSpec spec;
    std::optional<KappaMode> kappa_mode;
};

/// Instance schema: variant, d, L, seed, time_varying, m, K, servers, users,
/// budget, user_triggering, left, right, nodes, edge_prob, source, dest,
/// kappa_mode and repeated `edge = u v` lines.
InstanceFile parse_instance(const KvFile& kv);
InstanceFile read_instance_file(const std::string& path);

struct ExperimentConfig {
    InstanceSpec instance;
    std::optional<std::string> instance_path;
    /// Draw a fresh instance per seed instead of reusing `instance.seed`.
    bool vary_instance = false;
    std::vector<AlgoConfig> algorithms;
    long T = 1000;
    int seeds = 5;
    std::uint64_t master_seed = 1;
    std::string out_dir = "out";
    std::optional<OptimumMode> optimum_mode;  // unset: chosen from instance size
    int threads = 0;                          // 0: hardware concurrency

    void validate() const;
};

/// Builds an experiment from parsed key-value entries. Relative instance
/// paths resolve against `base_dir`.
ExperimentConfig parse_experiment(const KvFile& kv, const std::string& base_dir = ".");
ExperimentConfig load_experiment(const std::string& path,
                                 const std::map<std::string, std::string>& overrides = {});

}  // namespace clogb
