#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace dsec::cohort {

struct SplitSpec {
    double test_fraction = 0.25;
    std::size_t n_folds = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Row indices (ascending) of the held-out test set, the remaining training
/// rows and a stratified partition of the training rows into folds.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::vector<std::size_t>> folds;

    /// (training rows, validation rows) for cross-validation fold `f`.
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold(std::size_t f) const;
};

/// Per class, round(n_c · test_fraction) shuffled rows go to the test set and
/// the rest are dealt round-robin into folds.
Split stratified_split(std::span<const int> labels, const SplitSpec& spec);

} // namespace dsec::cohort
