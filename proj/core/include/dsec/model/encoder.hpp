#pragma once

#include <cstddef>
#include <vector>

#include "dsec/nn/dense.hpp"
#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::model {

enum class Variant { dec, dsec };

/// Layer sizes [n_feat, hidden..., m] plus one activation per encoder layer.
struct EncoderSpec {
    std::vector<std::size_t> layer_sizes;
    std::vector<Activation> activations;
    double corruption_sigma = 0.1;
    WeightInit init = WeightInit::glorot_uniform;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t embedding_dim() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }

    /// Throws DomainError listing what is wrong.
    void validate() const;

    friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

/// Encoder with the given hidden widths. DEC keeps the embedding layer linear
/// (relu on hidden layers only); DSEC uses relu on every encoder layer.
EncoderSpec make_encoder_spec(std::size_t n_features, std::vector<std::size_t> hidden, std::size_t embedding_dim,
                              Variant variant, double corruption_sigma = 0.1);

/// [n, 64, 32, 3]
EncoderSpec desk_spec(std::size_t n_features, Variant variant);
/// [n, 1000, 500, 3]
EncoderSpec full_scale_spec(std::size_t n_features, Variant variant);

struct EncoderModel {
    std::vector<DenseLayer> layers;
    EncoderSpec spec;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t embedding_dim() const { return layers.back().out_dim(); }
};

/// Encoder plus a mirrored decoder: hidden decoder layers use relu and the
/// reconstruction layer is linear.
struct AutoencoderModel {
    EncoderModel encoder;
    std::vector<DenseLayer> decoder;
};

AutoencoderModel make_autoencoder(const EncoderSpec& spec, Rng& rng);

/// Activations and inputs retained for backpropagation through a stack.
struct StackTrace {
    std::vector<Matrix> inputs;  // input to layer i
    std::vector<Matrix> caches;  // pre-activation of layer i
    Matrix output;
};

StackTrace forward_stack(const std::vector<DenseLayer>& layers, const Matrix& input);

/// Gradients for each layer of a stack; entries for frozen layers are left
/// empty. Returns dLoss/dInput of the first layer only if `need_input_grad`.
struct StackGradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
    Matrix grad_input;
};

StackGradients backward_stack(const std::vector<DenseLayer>& layers, const StackTrace& trace,
                              const Matrix& grad_output, bool need_input_grad = false);

/// Maps rows through every encoder layer without corruption.
Matrix encode(const EncoderModel& model, const Matrix& data);

} // namespace dsec::model
