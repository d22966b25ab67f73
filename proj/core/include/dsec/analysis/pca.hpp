#pragma once

#include <cstddef>
#include <vector>

#include "dsec/nn/matrix.hpp"

namespace dsec::analysis {

struct PcaModel {
    std::vector<double> mean;
    Matrix components;  // out_dims × cols, orthonormal rows
    std::vector<double> explained_variance;
    std::vector<double> explained_variance_ratio;
};

/// Principal axes of the sample covariance (divisor n − 1), strongest first.
/// Each component's largest-magnitude coordinate is made positive.
PcaModel pca_fit(const Matrix& points, std::size_t out_dims);

/// (x − mean) · componentsᵀ
Matrix pca_transform(const PcaModel& model, const Matrix& points);

struct PcaResult {
    Matrix projection;
    PcaModel model;
};

PcaResult pca(const Matrix& points, std::size_t out_dims);

} // namespace dsec::analysis
