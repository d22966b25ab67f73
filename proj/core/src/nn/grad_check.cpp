#include "dsec/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "dsec/error.hpp"

namespace dsec {

GradCheckReport grad_check(const std::function<double()>& loss, std::span<double> params,
                           std::span<const double> analytic, double tolerance, double step, double floor) {
    if (params.size() != analytic.size()) throw ShapeError("grad_check: params and analytic gradient differ in size");
    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = loss();
        params[i] = saved - step;
        const double down = loss();
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > report.max_relative_error || !std::isfinite(rel)) {
            report.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
            report.worst_index = i;
        }
        ++report.checked;
    }
    report.passed = report.max_relative_error < tolerance;
    return report;
}

std::size_t nudge_relu_kinks(std::vector<DenseLayer>& layers, const Matrix& input, double margin) {
    std::size_t moved = 0;
    Matrix x = input;
    for (auto& layer : layers) {
        if (layer.activation == Activation::relu) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const auto fwd = dense_forward(layer, x);
                bool clean = true;
                for (std::size_t j = 0; j < layer.out_dim(); ++j) {
                    for (std::size_t i = 0; i < fwd.cache.rows(); ++i) {
                        if (std::abs(fwd.cache(i, j)) < margin) {
                            layer.bias[j] += 2.0 * margin;
                            ++moved;
                            clean = false;
                            break;
                        }
                    }
                }
                if (clean) break;
            }
        }
        x = dense_forward(layer, x).output;
    }
    return moved;
}

} // namespace dsec
