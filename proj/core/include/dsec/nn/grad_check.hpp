#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dsec/nn/dense.hpp"

namespace dsec {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool passed = true;
};

/// Compares `analytic` against central differences of `loss` over every entry
/// of `params`. `loss` must read the current values of `params`; each entry is
/// restored after probing. Relative error is |a − n| / max(|a|, |n|, floor).
GradCheckReport grad_check(const std::function<double()>& loss, std::span<double> params,
                           std::span<const double> analytic, double tolerance, double step = 1e-5,
                           double floor = 1e-6);

/// Shifts relu biases so that no pre-activation of `input` through `layers`
/// lies within `margin` of the kink. Returns the number of units moved.
std::size_t nudge_relu_kinks(std::vector<DenseLayer>& layers, const Matrix& input, double margin);

} // namespace dsec
