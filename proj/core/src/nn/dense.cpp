#include "dsec/nn/dense.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dsec/error.hpp"

namespace dsec {

std::string_view to_string(Activation a) noexcept {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
    }
    return "linear";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    if (name == "softmax") return Activation::softmax;
    throw DomainError(fmt::format("unknown activation '{}'", name));
}

std::string_view to_string(WeightInit init) noexcept {
    return init == WeightInit::he_uniform ? "he_uniform" : "glorot_uniform";
}

WeightInit weight_init_from_string(std::string_view name) {
    if (name == "glorot_uniform") return WeightInit::glorot_uniform;
    if (name == "he_uniform") return WeightInit::he_uniform;
    throw DomainError(fmt::format("unknown weight init '{}'", name));
}

DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Activation activation, Rng& rng, WeightInit init) {
    if (in_dim == 0 || out_dim == 0) throw ShapeError("make_dense: layer dimensions must be positive");
    DenseLayer layer;
    layer.weights = Matrix(in_dim, out_dim);
    layer.bias.assign(out_dim, 0.0);
    layer.activation = activation;
    const double fan = init == WeightInit::he_uniform ? static_cast<double>(in_dim)
                                                      : static_cast<double>(in_dim + out_dim);
    const double limit = std::sqrt(6.0 / fan);
    for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
    return layer;
}

Matrix activate(Activation activation, const Matrix& pre) {
    Matrix out = pre;
    switch (activation) {
    case Activation::linear: break;
    case Activation::relu:
        for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
        break;
    case Activation::softmax:
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto r = out.row(i);
            const double mx = *std::max_element(r.begin(), r.end());
            double total = 0.0;
            for (double& v : r) {
                v = std::exp(v - mx);
                total += v;
            }
            for (double& v : r) v /= total;
        }
        break;
    }
    return out;
}

DenseForward dense_forward(const DenseLayer& layer, const Matrix& input) {
    if (input.cols() != layer.in_dim()) {
        throw ShapeError(fmt::format("dense_forward: input {} does not match weights {}", shape_string(input),
                                     shape_string(layer.weights)));
    }
    Matrix pre = matmul(input, layer.weights);
    for (std::size_t i = 0; i < pre.rows(); ++i) {
        auto r = pre.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
    }
    Matrix out = activate(layer.activation, pre);
    return {std::move(out), std::move(pre)};
}

DenseGradients dense_backward(const DenseLayer& layer, const Matrix& grad_output, const Matrix& cache,
                              const Matrix& input) {
    if (grad_output.rows() != cache.rows() || grad_output.cols() != cache.cols() ||
        cache.cols() != layer.out_dim() || input.rows() != cache.rows() || input.cols() != layer.in_dim()) {
        throw ShapeError(fmt::format("dense_backward: grad {} cache {} input {} weights {}", shape_string(grad_output),
                                     shape_string(cache), shape_string(input), shape_string(layer.weights)));
    }

    // dLoss/dPre
    Matrix grad_pre = grad_output;
    switch (layer.activation) {
    case Activation::linear: break;
    case Activation::relu:
        for (std::size_t i = 0; i < grad_pre.size(); ++i) {
            if (!(cache.values()[i] > 0.0)) grad_pre.values()[i] = 0.0;
        }
        break;
    case Activation::softmax: {
        const Matrix probs = activate(Activation::softmax, cache);
        for (std::size_t i = 0; i < grad_pre.rows(); ++i) {
            auto g = grad_pre.row(i);
            auto p = probs.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) dot += g[j] * p[j];
            for (std::size_t j = 0; j < g.size(); ++j) g[j] = p[j] * (g[j] - dot);
        }
        break;
    }
    }

    return affine_backward(layer, grad_pre, input);
}

DenseGradients affine_backward(const DenseLayer& layer, const Matrix& grad_pre, const Matrix& input) {
    if (grad_pre.cols() != layer.out_dim() || input.cols() != layer.in_dim() || input.rows() != grad_pre.rows()) {
        throw ShapeError(fmt::format("affine_backward: grad {} input {} weights {}", shape_string(grad_pre),
                                     shape_string(input), shape_string(layer.weights)));
    }
    DenseGradients grads;
    grads.grad_weights = matmul_tn(input, grad_pre);
    grads.grad_bias = column_sums(grad_pre);
    grads.grad_input = matmul_nt(grad_pre, layer.weights);
    return grads;
}

} // namespace dsec
