#include "clogb/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace clogb {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
    std::ostringstream os;
    os << source;
    if (line > 0) os << ':' << line;
    os << ": " << msg;
    throw ConfigError(os.str());
}

struct Reader {
    const std::string& source;
    const KvEntry& e;

    [[noreturn]] void bad(const std::string& what) const {
        fail(source, e.line, "key '" + e.key + "': " + what + " (got '" + e.value + "')");
    }

    long long integer() const {
        long long v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last) bad("expected an integer");
        return v;
    }
    int int32() const {
        const long long v = integer();
        if (v < -2147483647LL || v > 2147483647LL) bad("integer out of range");
        return static_cast<int>(v);
    }
    std::uint64_t u64() const {
        std::uint64_t v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last) bad("expected a non-negative integer");
        return v;
    }
    double real() const {
        double v = 0.0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [p, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || p != last || !std::isfinite(v)) bad("expected a finite number");
        return v;
    }
    bool boolean() const {
        if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no") return false;
        bad("expected true or false");
    }
    Edge edge() const {
        std::istringstream is(e.value);
        int u = 0, v = 0;
        std::string rest;
        if (!(is >> u >> v) || (is >> rest)) bad("expected two integers 'u v'");
        return {u, v};
    }
    KappaMode kappa() const {
        if (e.value == "exact") return KappaMode::exact;
        if (e.value == "bound") return KappaMode::bound;
        bad("expected exact or bound");
    }
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Applies one instance key; false when the key is not an instance key.
bool apply_instance_key(InstanceFile& inst, bool& edges_reset, const std::string& source,
                        const KvEntry& e, const std::string& key) {
    const Reader r{source, e};
    InstanceSpec& s = inst.spec;
    if (key == "variant") {
        try {
            s.variant = parse_variant(e.value);
        } catch (const std::invalid_argument&) {
            r.bad("expected cascading, pmc, matching or routing");
        }
    } else if (key == "d") {
        s.d = r.int32();
    } else if (key == "L") {
        s.L = r.real();
    } else if (key == "seed") {
        s.seed = r.u64();
    } else if (key == "time_varying") {
        s.time_varying = r.boolean();
    } else if (key == "m") {
        s.m = r.int32();
    } else if (key == "K") {
        s.K = r.int32();
    } else if (key == "servers") {
        s.servers = r.int32();
    } else if (key == "users") {
        s.users = r.int32();
    } else if (key == "budget") {
        s.budget = r.int32();
    } else if (key == "user_triggering") {
        s.user_triggering = r.boolean();
    } else if (key == "left") {
        s.left = r.int32();
    } else if (key == "right") {
        s.right = r.int32();
    } else if (key == "nodes") {
        s.nodes = r.int32();
    } else if (key == "edge_prob") {
        s.edge_prob = r.real();
    } else if (key == "source") {
        s.source = r.int32();
    } else if (key == "dest") {
        s.dest = r.int32();
    } else if (key == "kappa_mode") {
        inst.kappa_mode = r.kappa();
    } else if (key == "edge") {
        if (!edges_reset || !s.edges) {
            s.edges = std::vector<Edge>{};
            edges_reset = true;
        }
        s.edges->push_back(r.edge());
    } else {
        return false;
    }
    return true;
}

void check_instance(const InstanceSpec& s, const std::string& source) {
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) fail(source, 0, msg);
    };
    need(s.d >= 1, "d must be >= 1");
    need(s.L > 0.0, "L must be positive");
    switch (s.variant) {
        case VariantKind::cascading:
            need(s.m >= 1 && s.K >= 1 && s.K <= s.m, "cascading needs 1 <= K <= m");
            break;
        case VariantKind::pmc:
            need(s.servers >= 1 && s.users >= 1, "pmc needs servers >= 1 and users >= 1");
            need(s.budget >= 1 && s.budget <= s.servers, "pmc needs 1 <= budget <= servers");
            break;
        case VariantKind::matching:
            need(s.left >= 1 && s.right >= s.left, "matching needs 1 <= left <= right");
            break;
        case VariantKind::routing:
            need(s.nodes >= 2, "routing needs nodes >= 2");
            need(s.edge_prob >= 0.0 && s.edge_prob <= 1.0, "edge_prob must be in [0,1]");
            break;
    }
}

const std::set<std::string>& algorithm_keys() {
    static const std::set<std::string> keys = {
        "delta",       "kappa_mode", "projection",   "agnostic_bonus_scale", "mle_tol",
        "mle_max_iter", "epsilon",   "t0_scale",     "radius_scale",         "radius",
        "ridge_lambda", "variance_floor", "lazy_greedy"};
    return keys;
}

void apply_algorithm_key(AlgoConfig& a, const std::string& source, const KvEntry& e,
                         const std::string& key) {
    const Reader r{source, e};
    if (key == "delta") {
        a.delta = r.real();
    } else if (key == "kappa_mode") {
        a.kappa_mode = r.kappa();
    } else if (key == "projection") {
        if (e.value == "skip") a.projection = ProjectionMode::skip;
        else if (e.value == "heuristic") a.projection = ProjectionMode::heuristic;
        else r.bad("expected skip or heuristic");
    } else if (key == "agnostic_bonus_scale") {
        a.agnostic_bonus_scale = r.real();
    } else if (key == "mle_tol") {
        a.mle_tol = r.real();
    } else if (key == "mle_max_iter") {
        a.mle_max_iter = r.int32();
    } else if (key == "epsilon") {
        a.epsilon = r.real();
    } else if (key == "t0_scale") {
        a.t0_scale = r.real();
    } else if (key == "radius_scale") {
        a.radius_scale = r.real();
    } else if (key == "radius") {
        a.radius_override = r.real();
    } else if (key == "ridge_lambda") {
        a.ridge_lambda = r.real();
    } else if (key == "variance_floor") {
        a.variance_floor = r.real();
    } else if (key == "lazy_greedy") {
        a.lazy_greedy = r.boolean();
    }
}

}  // namespace

void KvFile::set(const std::string& key, const std::string& value) {
    std::erase_if(entries, [&](const KvEntry& e) { return e.key == key; });
    entries.push_back({key, value, 0});
}

KvFile parse_kv(const std::string& text, const std::string& source) {
    KvFile kv;
    kv.source = source;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) fail(source, line, "expected 'key = value'");
        KvEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
        if (e.key.empty()) fail(source, line, "empty key");
        if (e.value.empty()) fail(source, line, "key '" + e.key + "' has no value");
        kv.entries.push_back(std::move(e));
    }
    return kv;
}

KvFile read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv(ss.str(), path);
}

std::string to_string(OptimumMode mode) {
    return mode == OptimumMode::brute_force ? "brute_force" : "oracle_proxy";
}

InstanceFile parse_instance(const KvFile& kv) {
    InstanceFile inst;
    bool edges_reset = false;
    std::set<std::string> seen;
    for (const auto& e : kv.entries) {
        if (e.key != "edge" && !seen.insert(e.key).second) fail(kv.source, e.line, "duplicate key '" + e.key + "'");
        if (!apply_instance_key(inst, edges_reset, kv.source, e, e.key)) {
            fail(kv.source, e.line, "unknown instance key '" + e.key + "'");
        }
    }
    check_instance(inst.spec, kv.source);
    return inst;
}

InstanceFile read_instance_file(const std::string& path) { return parse_instance(read_kv_file(path)); }

void ExperimentConfig::validate() const {
    if (T < 1) throw ConfigError("T must be >= 1");
    if (seeds < 1) throw ConfigError("seeds must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    for (const auto& a : algorithms) {
        try {
            a.validate();
        } catch (const std::invalid_argument& ex) {
            throw ConfigError(to_string(a.kind) + ": " + ex.what());
        }
    }
}

ExperimentConfig parse_experiment(const KvFile& kv, const std::string& base_dir) {
    ExperimentConfig cfg;
    const std::string& src = kv.source;

    // Instance file first so inline instance keys can override it.
    InstanceFile inst;
    for (const auto& e : kv.entries) {
        if (e.key != "instance") continue;
        std::filesystem::path p(e.value);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        cfg.instance_path = p.string();
        try {
            inst = read_instance_file(p.string());
        } catch (const ConfigError& ex) {
            fail(src, e.line, std::string("in instance file: ") + ex.what());
        }
    }

    std::vector<std::string> names;
    std::vector<const KvEntry*> algo_entries;
    std::set<std::string> seen;
    bool edges_reset = false;
    for (const auto& e : kv.entries) {
        if (e.key != "edge" && !seen.insert(e.key).second) fail(src, e.line, "duplicate key '" + e.key + "'");
        const Reader r{src, e};
        if (e.key == "instance") continue;
        if (e.key == "T") {
            cfg.T = r.integer();
        } else if (e.key == "seeds") {
            cfg.seeds = r.int32();
        } else if (e.key == "master_seed") {
            cfg.master_seed = r.u64();
        } else if (e.key == "out") {
            cfg.out_dir = e.value;
        } else if (e.key == "threads") {
            cfg.threads = r.int32();
        } else if (e.key == "vary_instance") {
            cfg.vary_instance = r.boolean();
        } else if (e.key == "optimum_mode") {
            if (e.value == "brute_force") cfg.optimum_mode = OptimumMode::brute_force;
            else if (e.value == "oracle_proxy") cfg.optimum_mode = OptimumMode::oracle_proxy;
            else r.bad("expected brute_force or oracle_proxy");
        } else if (e.key == "algorithms") {
            names = split_list(e.value);
            if (names.empty()) r.bad("expected a comma-separated algorithm list");
            for (const auto& n : names) {
                try {
                    parse_algorithm(n);
                } catch (const std::invalid_argument&) {
                    r.bad("unknown algorithm '" + n + "'");
                }
            }
        } else if (e.key == "kappa_mode" || algorithm_keys().count(e.key) ||
                   e.key.find('.') != std::string::npos) {
            algo_entries.push_back(&e);
        } else if (!apply_instance_key(inst, edges_reset, src, e, e.key == "instance_seed" ? "seed" : e.key) ||
                   e.key == "seed") {
            fail(src, e.line, "unknown key '" + e.key + "'");
        }
    }
    if (names.empty()) fail(src, 0, "missing 'algorithms'");
    check_instance(inst.spec, src);
    cfg.instance = inst.spec;

    for (const auto& n : names) {
        AlgoConfig a;
        a.kind = parse_algorithm(n);
        if (inst.kappa_mode) a.kappa_mode = *inst.kappa_mode;
        // Global keys, then "name.key" overrides.
        for (const KvEntry* e : algo_entries) {
            if (e->key.find('.') == std::string::npos) apply_algorithm_key(a, src, *e, e->key);
        }
        for (const KvEntry* e : algo_entries) {
            const auto dot = e->key.find('.');
            if (dot == std::string::npos) continue;
            const std::string who = e->key.substr(0, dot), key = e->key.substr(dot + 1);
            if (!algorithm_keys().count(key)) fail(src, e->line, "unknown algorithm key '" + key + "'");
            if (who == n) apply_algorithm_key(a, src, *e, key);
        }
        cfg.algorithms.push_back(a);
    }
    for (const KvEntry* e : algo_entries) {
        const auto dot = e->key.find('.');
        if (dot == std::string::npos) continue;
        const std::string who = e->key.substr(0, dot);
        if (std::find(names.begin(), names.end(), who) == names.end()) {
            fail(src, e->line, "'" + who + "' is not in the algorithms list");
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& ex) {
        fail(src, 0, ex.what());
    }
    return cfg;
}

ExperimentConfig load_experiment(const std::string& path,
                                 const std::map<std::string, std::string>& overrides) {
    KvFile kv = read_kv_file(path);
    for (const auto& [k, v] : overrides) kv.set(k, v);
    const auto parent = std::filesystem::path(path).parent_path();
    return parse_experiment(kv, parent.empty() ? "." : parent.string());
}

}  // namespace clogb
