#pragma once

#include <cstddef>
#include <vector>

#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::analysis {

/// Hard partition of samples into k non-empty clusters with ids in [0, k).
struct ClusterAssignment {
    std::vector<std::size_t> labels;
    std::size_t k = 0;

    /// Sizes per cluster id.
    std::vector<std::size_t> sizes() const;
};

struct KMeansOptions {
    std::size_t max_iterations = 300;
    std::size_t restarts = 10;  // independent k-means++ seedings; best inertia wins
};

struct KMeansResult {
    Matrix centroids;
    ClusterAssignment assignment;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // per Lloyd iteration of the winning restart
    std::size_t iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations until assignments stop
/// changing. Empty clusters are re-seeded with the point farthest from its
/// current centroid. Ties resolve to the lowest index.
KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, const KMeansOptions& options = {});

/// Sum of squared distances from each point to its assigned centroid.
double inertia(const Matrix& points, const Matrix& centroids, const std::vector<std::size_t>& labels);

} // namespace dsec::analysis
