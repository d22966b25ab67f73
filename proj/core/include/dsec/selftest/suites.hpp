#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dsec::selftest {

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double worst = 0.0;  // largest error seen; meaning depends on the suite
    std::string detail;
    double seconds = 0.0;
};

/// Finite-difference checks (h = 1e-5, relative error < 1e-4) of every layer
/// and loss pairing plus the clustering head and full stacks, each on
/// `instances` random problems. One result per pairing.
std::vector<SuiteResult> gradient_suite(std::uint64_t seed, std::size_t instances = 20);

/// Ward linkage against the brute-force greedy oracle (n ≤ max_n).
SuiteResult ward_suite(std::uint64_t seed, std::size_t trials = 100, std::size_t max_n = 7);

/// k-means (k = 2) against exhaustive 2-partitions (n ≤ max_n). Up to
/// `allowed_miss_fraction` of trials may land in a local optimum provided the
/// result is a Lloyd fixed point.
SuiteResult kmeans_suite(std::uint64_t seed, std::size_t trials = 100, std::size_t max_n = 8,
                         double allowed_miss_fraction = 0.05);

/// Fisher p-values against exact enumeration on random tables with margins
/// ≤ max_margin, plus the exact (1, 1) result on tables with identical rows
/// or columns.
SuiteResult fisher_suite(std::uint64_t seed, std::size_t tables = 1000, std::size_t max_margin = 50);

} // namespace dsec::selftest
