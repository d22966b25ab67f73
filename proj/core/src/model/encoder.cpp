#include "dsec/model/encoder.hpp"

#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dsec/error.hpp"

namespace dsec::model {

void EncoderSpec::validate() const {
    std::vector<std::string> problems;
    if (layer_sizes.size() < 3) problems.emplace_back("need input, at least one hidden layer and an embedding layer");
    for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
        if (layer_sizes[i] == 0) problems.push_back(fmt::format("layer size {} is zero", i));
    }
    if (layer_sizes.size() >= 2 && !(layer_sizes.back() < layer_sizes.front())) {
        problems.push_back(fmt::format("embedding dimension {} must be smaller than input dimension {}",
                                       layer_sizes.back(), layer_sizes.front()));
    }
    if (layer_sizes.size() >= 2 && activations.size() != layer_sizes.size() - 1) {
        problems.push_back(
            fmt::format("{} activations given for {} encoder layers", activations.size(), layer_sizes.size() - 1));
    }
    for (Activation a : activations) {
        if (a == Activation::softmax) problems.emplace_back("softmax is not a valid encoder activation");
    }
    if (!(corruption_sigma >= 0.0)) problems.push_back(fmt::format("corruption_sigma {} < 0", corruption_sigma));
    if (!problems.empty()) throw DomainError(fmt::format("invalid encoder spec: {}", fmt::join(problems, "; ")));
}

EncoderSpec make_encoder_spec(std::size_t n_features, std::vector<std::size_t> hidden, std::size_t embedding_dim,
                              Variant variant, double corruption_sigma) {
    EncoderSpec spec;
    spec.layer_sizes.push_back(n_features);
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(embedding_dim);
    spec.activations.assign(spec.layer_sizes.size() - 1, Activation::relu);
    if (variant == Variant::dec) spec.activations.back() = Activation::linear;
    spec.corruption_sigma = corruption_sigma;
    return spec;
}

EncoderSpec desk_spec(std::size_t n_features, Variant variant) {
    return make_encoder_spec(n_features, {64, 32}, 3, variant);
}

EncoderSpec full_scale_spec(std::size_t n_features, Variant variant) {
    return make_encoder_spec(n_features, {1000, 500}, 3, variant);
}

AutoencoderModel make_autoencoder(const EncoderSpec& spec, Rng& rng) {
    spec.validate();
    AutoencoderModel ae;
    ae.encoder.spec = spec;
    const auto& sizes = spec.layer_sizes;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        ae.encoder.layers.push_back(make_dense(sizes[i], sizes[i + 1], spec.activations[i], rng, spec.init));
    }
    for (std::size_t i = sizes.size() - 1; i > 0; --i) {
        const Activation act = i == 1 ? Activation::linear : Activation::relu;
        ae.decoder.push_back(make_dense(sizes[i], sizes[i - 1], act, rng, spec.init));
    }
    return ae;
}

StackTrace forward_stack(const std::vector<DenseLayer>& layers, const Matrix& input) {
    StackTrace trace;
    trace.inputs.reserve(layers.size());
    trace.caches.reserve(layers.size());
    Matrix x = input;
    for (const auto& layer : layers) {
        auto fwd = dense_forward(layer, x);
        trace.inputs.push_back(std::move(x));
        trace.caches.push_back(std::move(fwd.cache));
        x = std::move(fwd.output);
    }
    trace.output = std::move(x);
    return trace;
}

StackGradients backward_stack(const std::vector<DenseLayer>& layers, const StackTrace& trace,
                              const Matrix& grad_output, bool need_input_grad) {
    StackGradients grads;
    grads.weights.resize(layers.size());
    grads.bias.resize(layers.size());
    Matrix g = grad_output;
    // Layers below the lowest trainable one need no gradient unless the
    // caller wants dLoss/dInput.
    std::size_t lowest = layers.size();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].trainable) {
            lowest = i;
            break;
        }
    }
    if (need_input_grad) lowest = 0;
    for (std::size_t i = layers.size(); i-- > lowest;) {
        auto lg = dense_backward(layers[i], g, trace.caches[i], trace.inputs[i]);
        if (layers[i].trainable) {
            grads.weights[i] = std::move(lg.grad_weights);
            grads.bias[i] = std::move(lg.grad_bias);
        }
        g = std::move(lg.grad_input);
    }
    if (need_input_grad) grads.grad_input = std::move(g);
    return grads;
}

Matrix encode(const EncoderModel& model, const Matrix& data) {
    if (model.layers.empty()) throw ShapeError("encode: empty encoder");
    if (data.cols() != model.input_dim()) {
        throw ShapeError(fmt::format("encode: data {} but encoder expects {} features", shape_string(data),
                                     model.input_dim()));
    }
    Matrix x = data;
    for (const auto& layer : model.layers) x = dense_forward(layer, x).output;
    return x;
}

} // namespace dsec::model
