#pragma once

#include <string_view>
#include <vector>

#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec {

enum class Activation { relu, linear, softmax };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view name);

enum class WeightInit { glorot_uniform, he_uniform };

std::string_view to_string(WeightInit init) noexcept;
WeightInit weight_init_from_string(std::string_view name);

/// Fully connected layer computing activation(input · W + b).
struct DenseLayer {
    Matrix weights;            // in_dim × out_dim
    std::vector<double> bias;  // out_dim
    Activation activation = Activation::linear;
    bool trainable = true;

    std::size_t in_dim() const noexcept { return weights.rows(); }
    std::size_t out_dim() const noexcept { return weights.cols(); }
    std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Zero bias; W ~ U(-l, l) with l = √(6/(in+out)) for Glorot and √(6/in)
/// for He.
DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Activation activation, Rng& rng,
                      WeightInit init = WeightInit::glorot_uniform);

struct DenseForward {
    Matrix output;
    Matrix cache;  // pre-activation values
};

struct DenseGradients {
    Matrix grad_input;
    Matrix grad_weights;
    std::vector<double> grad_bias;
};

DenseForward dense_forward(const DenseLayer& layer, const Matrix& input);

/// Backpropagates `grad_output` (dLoss/dOutput) through the layer. `cache` and
/// `input` must come from the matching dense_forward call.
DenseGradients dense_backward(const DenseLayer& layer, const Matrix& grad_output, const Matrix& cache,
                              const Matrix& input);

/// Backpropagates a gradient already taken w.r.t. the pre-activation.
DenseGradients affine_backward(const DenseLayer& layer, const Matrix& grad_pre, const Matrix& input);

/// Applies `activation` to a matrix of pre-activations. Softmax is row-wise
/// with the row maximum subtracted first.
Matrix activate(Activation activation, const Matrix& pre);

} // namespace dsec
