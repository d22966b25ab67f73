#include "dsec/cohort/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "dsec/error.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::cohort {

void SplitSpec::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DomainError(fmt::format("split: test_fraction {} must lie in (0, 1)", test_fraction));
    }
    if (n_folds < 2) throw DomainError(fmt::format("split: n_folds {} must be at least 2", n_folds));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> Split::fold(std::size_t f) const {
    if (f >= folds.size()) throw DomainError(fmt::format("split: fold {} of {}", f, folds.size()));
    std::vector<std::size_t> train_rows;
    for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    return {std::move(train_rows), folds[f]};
}

Split stratified_split(std::span<const int> labels, const SplitSpec& spec) {
    spec.validate();
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    if (by_class.size() < 2) throw DomainError("stratified_split: both classes must be present");

    Rng rng(spec.seed);
    Split split;
    split.folds.resize(spec.n_folds);
    for (auto& [label, rows] : by_class) {
        rng.shuffle(std::span<std::size_t>(rows));
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * spec.test_fraction));
        if (rows.size() - n_test < spec.n_folds) {
            throw DomainError(fmt::format("stratified_split: class {} has {} training rows, fewer than {} folds", label,
                                          rows.size() - n_test, spec.n_folds));
        }
        split.test.insert(split.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        for (std::size_t i = n_test; i < rows.size(); ++i) {
            split.train.push_back(rows[i]);
            split.folds[(i - n_test) % spec.n_folds].push_back(rows[i]);
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    for (auto& f : split.folds) std::sort(f.begin(), f.end());
    return split;
}

} // namespace dsec::cohort
