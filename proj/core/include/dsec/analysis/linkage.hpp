#pragma once

#include <cstddef>
#include <vector>

#include "dsec/analysis/kmeans.hpp"
#include "dsec/nn/matrix.hpp"

namespace dsec::analysis {

/// One agglomeration step. Leaves carry ids 0..n−1; the cluster created by
/// merge s gets id n + s. `left` < `right`.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double distance = 0.0;  // Ward distance √(2·ΔSSE)
    std::size_t new_id = 0;
    std::size_t size = 0;   // leaves under new_id

    friend bool operator==(const Merge&, const Merge&) = default;
};

struct LinkageTree {
    std::vector<Merge> merges;
    std::size_t leaf_count = 0;

    /// Leaves under every cluster id (0 .. 2n−2), each list sorted.
    std::vector<std::vector<std::size_t>> members() const;
};

/// Agglomerative clustering with Ward linkage via Lance–Williams updates on
/// squared Euclidean distances. The merged pair minimizes the Ward distance;
/// ties go to the lexicographically smallest (left id, right id).
///
/// The increase in within-cluster sum of squares when merging U and V is
///   ΔSSE = |U||V| / (|U| + |V|) · ‖c_U − c_V‖²
/// and the reported distance is √(2·ΔSSE), which equals the Euclidean
/// distance for two singletons.
LinkageTree agglomerative_ward(const Matrix& points);

/// Partition obtained by undoing the last k−1 merges. Cluster ids are numbered
/// in order of their lowest leaf index.
ClusterAssignment cut_tree(const LinkageTree& tree, std::size_t k);

} // namespace dsec::analysis
