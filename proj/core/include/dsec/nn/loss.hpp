#pragma once

#include <string_view>

#include "dsec/nn/matrix.hpp"

namespace dsec {

enum class LossKind { mse, mae, bce, kl_divergence };

std::string_view to_string(LossKind kind) noexcept;

inline constexpr double kProbabilityClamp = 1e-12;
inline constexpr double kNormalizationTolerance = 1e-6;

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // dLoss/dPrediction
};

/// Scalar loss and its gradient with respect to `prediction`.
///
/// mse, mae and bce average over every element. kl_divergence computes
/// KL(target ‖ prediction) summed over each row and averaged over rows; the
/// target is treated as a constant.
LossResult loss_and_grad(LossKind kind, const Matrix& prediction, const Matrix& target);

/// Softmax cross-entropy from logits against one-hot targets, averaged over
/// rows, with the gradient taken w.r.t. the logits. Uses log-sum-exp. For two
/// classes this equals element-averaged BCE on the softmax output.
LossResult softmax_cross_entropy(const Matrix& logits, const Matrix& one_hot);

} // namespace dsec
