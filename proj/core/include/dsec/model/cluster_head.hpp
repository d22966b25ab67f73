#pragma once

#include "dsec/nn/matrix.hpp"

namespace dsec::model {

/// k centroids in the embedded space and the Student's t degrees of freedom.
struct ClusterHead {
    Matrix centroids;  // k × m
    double alpha = 1.0;

    std::size_t k() const noexcept { return centroids.rows(); }

    friend bool operator==(const ClusterHead&, const ClusterHead&) = default;
};

/// Student's t soft assignment:
///   q_ij ∝ (1 + ‖z_i − μ_j‖² / α)^(−(α+1)/2), normalized over j.
Matrix soft_assign(const Matrix& embedding, const ClusterHead& head);

/// Sharpened targets p_ij ∝ q_ij² / f_j with soft frequencies f_j = Σ_i q_ij.
Matrix target_distribution(const Matrix& q);

struct SoftAssignGradients {
    Matrix grad_embedding;  // n × m
    Matrix grad_centroids;  // k × m
};

/// Chain rule through soft_assign given dLoss/dQ.
SoftAssignGradients soft_assign_backward(const Matrix& embedding, const ClusterHead& head, const Matrix& q,
                                         const Matrix& grad_q);

/// Row-wise argmax with ties to the lowest index.
std::vector<std::size_t> hard_assignments(const Matrix& q);

} // namespace dsec::model
