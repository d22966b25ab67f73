#include "dsec/eval/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::eval {

namespace {

double gini(std::array<std::size_t, 2> counts) {
    const double n = static_cast<double>(counts[0] + counts[1]);
    if (n == 0.0) return 0.0;
    const double p = static_cast<double>(counts[1]) / n;
    return 2.0 * p * (1.0 - p);
}

struct Grower {
    const Matrix& x;
    std::span<const int> y;
    const ForestOptions& options;
    Rng& rng;
    std::size_t max_features;
    DecisionTree tree;

    std::size_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
        const std::size_t id = tree.nodes.size();
        tree.nodes.emplace_back();
        std::array<std::size_t, 2> counts{0, 0};
        for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y[r])];
        const double n = static_cast<double>(rows.size());
        tree.nodes[id].probability = {static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n};
        if (depth >= options.max_depth || rows.size() < options.min_samples_split || counts[0] == 0 || counts[1] == 0) {
            return id;
        }

        std::vector<std::size_t> candidates(x.cols());
        std::iota(candidates.begin(), candidates.end(), std::size_t{0});
        for (std::size_t i = 0; i < max_features; ++i) {
            std::swap(candidates[i], candidates[i + rng.index(candidates.size() - i)]);
        }

        const double parent = gini(counts);
        double best = parent;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> sorted = rows;
        for (std::size_t c = 0; c < max_features; ++c) {
            const std::size_t f = candidates[c];
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
            std::array<std::size_t, 2> left{0, 0};
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                ++left[static_cast<std::size_t>(y[sorted[i]])];
                const double lo = x(sorted[i], f);
                const double hi = x(sorted[i + 1], f);
                if (!(lo < hi)) continue;
                const double g = split_gini(left, {counts[0] - left[0], counts[1] - left[1]});
                if (g < best - 1e-12) {
                    best = g;
                    best_feature = static_cast<int>(f);
                    best_threshold = lo + (hi - lo) / 2.0;
                    if (!(best_threshold < hi)) best_threshold = lo;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left_rows, right_rows;
        const auto f = static_cast<std::size_t>(best_feature);
        for (std::size_t r : rows) (x(r, f) <= best_threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        tree.nodes[id].feature = best_feature;
        tree.nodes[id].threshold = best_threshold;
        const std::size_t l = grow(left_rows, depth + 1);
        const std::size_t r = grow(right_rows, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }
};

std::size_t resolve_max_features(const ForestOptions& options, std::size_t d) {
    std::size_t m = options.max_features;
    if (m == 0) m = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    return std::clamp<std::size_t>(m, 1, d);
}

} // namespace

double split_gini(std::array<std::size_t, 2> left, std::array<std::size_t, 2> right) {
    const double nl = static_cast<double>(left[0] + left[1]);
    const double nr = static_cast<double>(right[0] + right[1]);
    return (nl * gini(left) + nr * gini(right)) / (nl + nr);
}

double DecisionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].probability[1];
}

std::size_t DecisionTree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (nodes[i].feature >= 0) {
            stack.emplace_back(nodes[i].left, d + 1);
            stack.emplace_back(nodes[i].right, d + 1);
        }
    }
    return deepest;
}

DecisionTree grow_tree(const Matrix& features, std::span<const int> labels, std::vector<std::size_t> rows,
                       const ForestOptions& options, Rng& rng) {
    if (rows.empty()) throw DomainError("grow_tree: no rows");
    Grower g{features, labels, options, rng, resolve_max_features(options, features.cols()), {}};
    g.grow(rows, 0);
    return std::move(g.tree);
}

ForestModel forest_train(const Matrix& features, std::span<const int> labels, const ForestOptions& options, Rng& rng) {
    if (features.rows() != labels.size()) {
        throw ShapeError(fmt::format("forest_train: {} rows for {} labels", features.rows(), labels.size()));
    }
    if (features.cols() == 0) throw ShapeError("forest_train: no features");
    if (options.n_trees == 0) throw DomainError("forest_train: n_trees must be positive");
    std::array<std::size_t, 2> counts{0, 0};
    for (int l : labels) {
        if (l != 0 && l != 1) throw DomainError(fmt::format("forest_train: label {} is not 0/1", l));
        ++counts[static_cast<std::size_t>(l)];
    }
    if (counts[0] < 2 || counts[1] < 2) {
        throw DomainError(fmt::format("forest_train: need two samples per class, have {} and {}", counts[0], counts[1]));
    }
    if (!all_finite(features)) throw DomainError("forest_train: non-finite feature value");

    ForestModel model;
    model.options = options;
    model.seed = rng.next_u64();
    const std::size_t n = features.rows();
    for (std::size_t t = 0; t < options.n_trees; ++t) {
        Rng tree_rng(derive_seed(model.seed, fmt::format("tree.{}", t)));
        std::vector<std::size_t> rows(n);
        if (options.bootstrap) {
            for (auto& r : rows) r = tree_rng.index(n);
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        model.trees.push_back(grow_tree(features, labels, std::move(rows), options, tree_rng));
    }
    return model;
}

std::vector<double> forest_predict(const ForestModel& model, const Matrix& features) {
    if (model.trees.empty()) throw DomainError("forest_predict: empty forest");
    std::vector<double> scores(features.rows(), 0.0);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        double sum = 0.0;
        for (const auto& tree : model.trees) sum += tree.predict(features.row(i));
        scores[i] = sum / static_cast<double>(model.trees.size());
    }
    return scores;
}

} // namespace dsec::eval
