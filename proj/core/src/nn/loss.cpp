#include "dsec/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec {

std::string_view to_string(LossKind kind) noexcept {
    switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::mae: return "mae";
    case LossKind::bce: return "bce";
    case LossKind::kl_divergence: return "kl_divergence";
    }
    return "mse";
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(fmt::format("{}: prediction {} vs target {}", what, shape_string(a), shape_string(b)));
    }
    if (a.empty()) throw ShapeError(fmt::format("{}: empty input", what));
}

void require_distribution_rows(const Matrix& m, std::string_view which) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double total = 0.0;
        for (double v : m.row(i)) {
            if (v < 0.0 || !std::isfinite(v)) {
                throw DomainError(fmt::format("kl_divergence: {} row {} has entry {}", which, i, v));
            }
            total += v;
        }
        if (std::abs(total - 1.0) > kNormalizationTolerance) {
            throw DomainError(fmt::format("kl_divergence: {} row {} sums to {}", which, i, total));
        }
    }
}

} // namespace

LossResult loss_and_grad(LossKind kind, const Matrix& prediction, const Matrix& target) {
    require_same_shape(prediction, target, to_string(kind));
    const auto n = static_cast<double>(prediction.size());
    LossResult out{0.0, Matrix(prediction.rows(), prediction.cols())};
    auto pred = prediction.values();
    auto tgt = target.values();
    auto grad = out.grad.values();

    switch (kind) {
    case LossKind::mse:
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - tgt[i];
            out.loss += d * d;
            grad[i] = 2.0 * d / n;
        }
        out.loss /= n;
        break;
    case LossKind::mae:
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - tgt[i];
            out.loss += std::abs(d);
            grad[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
        }
        out.loss /= n;
        break;
    case LossKind::bce:
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (tgt[i] != 0.0 && tgt[i] != 1.0) {
                throw DomainError(fmt::format("bce: target {} at index {} is not binary", tgt[i], i));
            }
            if (pred[i] < -kProbabilityClamp || pred[i] > 1.0 + kProbabilityClamp || !std::isfinite(pred[i])) {
                throw DomainError(fmt::format("bce: prediction {} at index {} outside (0,1)", pred[i], i));
            }
            const double p = std::clamp(pred[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
            out.loss -= tgt[i] * std::log(p) + (1.0 - tgt[i]) * std::log(1.0 - p);
            grad[i] = (-tgt[i] / p + (1.0 - tgt[i]) / (1.0 - p)) / n;
        }
        out.loss /= n;
        break;
    case LossKind::kl_divergence: {
        require_distribution_rows(prediction, "prediction");
        require_distribution_rows(target, "target");
        const auto rows = static_cast<double>(prediction.rows());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double q = std::max(pred[i], kProbabilityClamp);
            if (tgt[i] > 0.0) out.loss += tgt[i] * (std::log(tgt[i]) - std::log(q));
            grad[i] = -tgt[i] / q / rows;
        }
        out.loss /= rows;
        break;
    }
    }
    return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, const Matrix& one_hot) {
    require_same_shape(logits, one_hot, "softmax_cross_entropy");
    const auto rows = static_cast<double>(logits.rows());
    LossResult out{0.0, Matrix(logits.rows(), logits.cols())};
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto z = logits.row(i);
        auto t = one_hot.row(i);
        const double mx = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (double v : z) total += std::exp(v - mx);
        const double log_norm = mx + std::log(total);
        auto g = out.grad.row(i);
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (t[j] != 0.0 && t[j] != 1.0) {
                throw DomainError(fmt::format("softmax_cross_entropy: target {} is not one-hot", t[j]));
            }
            const double log_p = z[j] - log_norm;
            out.loss -= t[j] * log_p;
            g[j] = (std::exp(log_p) - t[j]) / rows;
        }
    }
    out.loss /= rows;
    return out;
}

} // namespace dsec
