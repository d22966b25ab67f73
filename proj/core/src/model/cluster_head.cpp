#include "dsec/model/cluster_head.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::model {

namespace {

void check_head(const Matrix& embedding, const ClusterHead& head, const char* what) {
    if (head.k() < 2) throw DomainError(fmt::format("{}: need at least 2 centroids, got {}", what, head.k()));
    if (!(head.alpha > 0.0)) throw DomainError(fmt::format("{}: alpha must be positive", what));
    if (embedding.cols() != head.centroids.cols()) {
        throw ShapeError(fmt::format("{}: embedding {} vs centroids {}", what, shape_string(embedding),
                                     shape_string(head.centroids)));
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

} // namespace

Matrix soft_assign(const Matrix& embedding, const ClusterHead& head) {
    check_head(embedding, head, "soft_assign");
    const double exponent = -(head.alpha + 1.0) / 2.0;
    Matrix q(embedding.rows(), head.k());
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < head.k(); ++j) {
            const double d = squared_distance(embedding.row(i), head.centroids.row(j));
            q(i, j) = std::pow(1.0 + d / head.alpha, exponent);
            total += q(i, j);
        }
        for (double& v : q.row(i)) v /= total;
    }
    return q;
}

Matrix target_distribution(const Matrix& q) {
    const std::vector<double> freq = column_sums(q);
    for (std::size_t j = 0; j < freq.size(); ++j) {
        if (!(freq[j] > 0.0)) throw DomainError(fmt::format("target_distribution: soft cluster {} is empty", j));
    }
    Matrix p(q.rows(), q.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < q.cols(); ++j) {
            p(i, j) = q(i, j) * q(i, j) / freq[j];
            total += p(i, j);
        }
        for (double& v : p.row(i)) v /= total;
    }
    return p;
}

SoftAssignGradients soft_assign_backward(const Matrix& embedding, const ClusterHead& head, const Matrix& q,
                                         const Matrix& grad_q) {
    check_head(embedding, head, "soft_assign_backward");
    const std::size_t m = embedding.cols();
    SoftAssignGradients out{Matrix(embedding.rows(), m), Matrix(head.k(), m)};
    const double scale = (head.alpha + 1.0) / head.alpha;
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < head.k(); ++j) dot += grad_q(i, j) * q(i, j);
        for (std::size_t j = 0; j < head.k(); ++j) {
            // dLoss/dlog w_ij, with log w_ij = −(α+1)/2 · log(1 + d_ij/α)
            const double g_logw = q(i, j) * (grad_q(i, j) - dot);
            const double d = squared_distance(embedding.row(i), head.centroids.row(j));
            const double coeff = -g_logw * scale / (1.0 + d / head.alpha);
            for (std::size_t c = 0; c < m; ++c) {
                const double diff = embedding(i, c) - head.centroids(j, c);
                out.grad_embedding(i, c) += coeff * diff;
                out.grad_centroids(j, c) -= coeff * diff;
            }
        }
    }
    return out;
}

std::vector<std::size_t> hard_assignments(const Matrix& q) {
    std::vector<std::size_t> out(q.rows(), 0);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        for (std::size_t j = 1; j < q.cols(); ++j) {
            if (q(i, j) > q(i, out[i])) out[i] = j;
        }
    }
    return out;
}

} // namespace dsec::model
