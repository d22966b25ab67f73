#include "dsec/analysis/pca.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec::analysis {

PcaModel pca_fit(const Matrix& points, std::size_t out_dims) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (out_dims == 0 || out_dims > d) {
        throw DomainError(fmt::format("pca: out_dims = {} must lie in [1, {}]", out_dims, d));
    }
    if (n == 0) throw DomainError("pca: no samples");

    PcaModel model;
    model.mean = column_sums(points);
    for (double& m : model.mean) m /= static_cast<double>(n);

    Eigen::MatrixXd centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = points(i, j) - model.mean[j];
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("pca: eigendecomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vectors = solver.eigenvectors();

    double total = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) total += std::max(0.0, values(i));

    model.components = Matrix(out_dims, d);
    for (std::size_t c = 0; c < out_dims; ++c) {
        const auto col = static_cast<Eigen::Index>(d - 1 - c);
        std::size_t pivot = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(vectors(static_cast<Eigen::Index>(j), col)) >
                std::abs(vectors(static_cast<Eigen::Index>(pivot), col))) {
                pivot = j;
            }
        }
        const double sign = vectors(static_cast<Eigen::Index>(pivot), col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) model.components(c, j) = sign * vectors(static_cast<Eigen::Index>(j), col);
        const double var = std::max(0.0, values(col));
        model.explained_variance.push_back(var);
        model.explained_variance_ratio.push_back(total > 0.0 ? var / total : 0.0);
    }
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& points) {
    if (points.cols() != model.mean.size()) {
        throw ShapeError(fmt::format("pca_transform: points {} vs model with {} columns", shape_string(points),
                                     model.mean.size()));
    }
    Matrix centered = points;
    for (std::size_t i = 0; i < centered.rows(); ++i)
        for (std::size_t j = 0; j < centered.cols(); ++j) centered(i, j) -= model.mean[j];
    return matmul_nt(centered, model.components);
}

PcaResult pca(const Matrix& points, std::size_t out_dims) {
    PcaModel model = pca_fit(points, out_dims);
    Matrix projection = pca_transform(model, points);
    return {std::move(projection), std::move(model)};
}

} // namespace dsec::analysis
