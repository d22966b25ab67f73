#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dsec/eval/roc.hpp"
#include "dsec/nn/matrix.hpp"

namespace dsec::eval {

struct NamedCurve {
    std::string name;
    RocCurve curve;
};

/// ROC curves with the chance diagonal; the legend shows each AUC.
void write_roc_svg(std::ostream& out, std::span<const NamedCurve> curves, const std::string& title);

/// Scatter of the first two columns of `points`, coloured by group id.
void write_scatter_svg(std::ostream& out, const Matrix& points, std::span<const int> groups, const std::string& title);

} // namespace dsec::eval
