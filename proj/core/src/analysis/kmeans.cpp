#include "dsec/analysis/kmeans.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::analysis {

std::vector<std::size_t> ClusterAssignment::sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (std::size_t l : labels) ++out[l];
    return out;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

Matrix plus_plus_seeds(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<double> closest(n, std::numeric_limits<double>::infinity());
    std::vector<bool> chosen(n, false);
    std::size_t pick = rng.index(n);
    for (std::size_t c = 0; c < k; ++c) {
        chosen[pick] = true;
        std::copy_n(points.row(pick).begin(), points.cols(), centroids.row(c).begin());
        if (c + 1 == k) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            closest[i] = std::min(closest[i], sq_dist(points.row(i), centroids.row(c)));
            total += closest[i];
        }
        if (total > 0.0) {
            double target = rng.uniform() * total;
            pick = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (closest[i] <= 0.0) continue;
                pick = i;
                target -= closest[i];
                if (target < 0.0) break;
            }
        } else {
            // Every remaining point coincides with a chosen seed.
            pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
            if (pick == n) pick = 0;
        }
    }
    return centroids;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations) {
    const std::size_t n = points.rows();
    const std::size_t k = centroids.rows();
    const std::size_t dim = points.cols();
    KMeansResult result;
    std::vector<std::size_t> labels(n, 0);
    bool first = true;
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = first;
        first = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = sq_dist(points.row(i), centroids.row(0));
            for (std::size_t j = 1; j < k; ++j) {
                const double d = sq_dist(points.row(i), centroids.row(j));
                if (d < best_d) {
                    best_d = d;
                    best = j;
                }
            }
            if (labels[i] != best) changed = true;
            labels[i] = best;
        }
        result.inertia_trace.push_back(inertia(points, centroids, labels));
        result.iterations = iter + 1;
        if (!changed) break;

        std::vector<std::size_t> counts(k, 0);
        Matrix sums(k, dim);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[labels[i]];
            for (std::size_t c = 0; c < dim; ++c) sums(labels[i], c) += points(i, c);
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                // Re-seed with the point farthest from its own centroid.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (counts[labels[i]] <= 1) continue;
                    const double d = sq_dist(points.row(i), centroids.row(labels[i]));
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                --counts[labels[far]];
                for (std::size_t c = 0; c < dim; ++c) sums(labels[far], c) -= points(far, c);
                labels[far] = j;
                counts[j] = 1;
                for (std::size_t c = 0; c < dim; ++c) sums(j, c) = points(far, c);
            }
        }
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t c = 0; c < dim; ++c) centroids(j, c) = sums(j, c) / static_cast<double>(counts[j]);
    }
    result.inertia = inertia(points, centroids, labels);
    result.centroids = std::move(centroids);
    result.assignment = {std::move(labels), k};
    return result;
}

} // namespace

double inertia(const Matrix& points, const Matrix& centroids, const std::vector<std::size_t>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) total += sq_dist(points.row(i), centroids.row(labels[i]));
    return total;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, const KMeansOptions& options) {
    if (k == 0) throw DomainError("kmeans: k must be positive");
    if (k > points.rows()) {
        throw DomainError(fmt::format("kmeans: k = {} exceeds the number of samples {}", k, points.rows()));
    }
    KMeansResult best;
    bool have_best = false;
    const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
    for (std::size_t r = 0; r < restarts; ++r) {
        KMeansResult run = lloyd(points, plus_plus_seeds(points, k, rng), std::max<std::size_t>(1, options.max_iterations));
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }
    return best;
}

} // namespace dsec::analysis
