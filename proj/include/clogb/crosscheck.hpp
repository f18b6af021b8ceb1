#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace clogb {

struct OracleCheck {
    std::string oracle;
    int instances = 0;
    int failures = 0;
    std::string first_failure;
    bool passed() const { return failures == 0; }
};

/// Cross-checks every offline oracle against exhaustive enumeration on small
/// random instances: topk (exact, m <= 8), Hungarian (exact, right side <= 6),
/// Dijkstra (exact, <= 7 nodes) and greedy PMC (>= (1 - 1/e) OPT, <= 6 users).
std::vector<OracleCheck> check_oracles(int instances_per_oracle = 100, std::uint64_t seed = 2024);

}  // namespace clogb
