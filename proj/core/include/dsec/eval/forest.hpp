#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::eval {

struct ForestOptions {
    std::size_t n_trees = 100;
    std::size_t max_depth = 8;
    std::size_t min_samples_split = 2;
    std::size_t max_features = 0;  // 0 = round(√d)
    bool bootstrap = true;
};

struct TreeNode {
    int feature = -1;  // −1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    std::size_t left = 0;
    std::size_t right = 0;
    std::array<double, 2> probability{1.0, 0.0};  // class 0, class 1
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestOptions options;
    std::uint64_t seed = 0;
};

/// Binary random forest with Gini splits. Each tree draws its own bootstrap
/// sample and feature subsets from a generator seeded by (seed, tree index),
/// so trees are independent of training order. Thresholds sit midway between
/// adjacent distinct values; ties in impurity keep the first candidate.
/// Requires at least two samples of each class.
ForestModel forest_train(const Matrix& features, std::span<const int> labels, const ForestOptions& options, Rng& rng);

/// Mean positive-class leaf probability over the trees, one score per row.
std::vector<double> forest_predict(const ForestModel& model, const Matrix& features);

/// Single tree on the given rows (with repetition) and generator.
DecisionTree grow_tree(const Matrix& features, std::span<const int> labels, std::vector<std::size_t> rows,
                       const ForestOptions& options, Rng& rng);

/// Weighted Gini impurity of a two-way split with the given class counts.
double split_gini(std::array<std::size_t, 2> left, std::array<std::size_t, 2> right);

} // namespace dsec::eval
