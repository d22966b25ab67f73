#include "dsec/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dsec/analysis/kmeans.hpp"
#include "dsec/error.hpp"
#include "dsec/nn/noise.hpp"

namespace dsec::model {

void TrainingSchedule::validate() const {
    if (pretrain_epochs == 0 || transfer_epochs == 0 || cluster_epochs == 0) {
        throw DomainError("training schedule: every phase needs at least one epoch");
    }
    if (!(alpha > 0.0)) throw DomainError("training schedule: alpha must be positive");
    make_adam_state(adam, 0, "training schedule");  // rejects bad learning rate, betas or epsilon
    if (!(early_stop_tolerance >= 0.0 && early_stop_tolerance < 1.0)) {
        throw DomainError("training schedule: early_stop_tolerance must lie in [0, 1)");
    }
}

namespace {

struct LayerState {
    AdamState weights;
    AdamState bias;
};

std::vector<LayerState> make_states(const std::vector<DenseLayer>& layers, const AdamConfig& config,
                                    std::string_view prefix) {
    std::vector<LayerState> states;
    states.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        states.push_back({make_adam_state(config, layers[i].weights.size(), fmt::format("{}[{}].weights", prefix, i)),
                          make_adam_state(config, layers[i].bias.size(), fmt::format("{}[{}].bias", prefix, i))});
    }
    return states;
}

void apply_updates(std::vector<DenseLayer>& layers, const StackGradients& grads, std::vector<LayerState>& states) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].trainable) continue;
        adam_step(states[i].weights, layers[i].weights.values(), grads.weights[i].values());
        adam_step(states[i].bias, layers[i].bias, grads.bias[i]);
    }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (batch_size == 0 || batch_size >= n) return {order};
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

void check_finite_loss(double loss, std::string_view phase, std::size_t epoch) {
    if (!std::isfinite(loss)) {
        throw TrainingError(fmt::format("{}: non-finite loss at epoch {}", phase, epoch));
    }
}

Matrix one_hot(std::span<const int> labels) {
    Matrix out(labels.size(), 2);
    for (std::size_t i = 0; i < labels.size(); ++i) out(i, static_cast<std::size_t>(labels[i])) = 1.0;
    return out;
}

void check_binary_labels(std::span<const int> labels, std::size_t rows) {
    if (labels.size() != rows) {
        throw ShapeError(fmt::format("{} labels for {} rows", labels.size(), rows));
    }
    std::size_t positives = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw DomainError(fmt::format("label {} is not binary", l));
        positives += static_cast<std::size_t>(l);
    }
    if (positives == 0 || positives == labels.size()) {
        throw DomainError("transfer_train: labels contain a single class");
    }
}

} // namespace

PretrainResult pretrain_autoencoder(const Matrix& data, const EncoderSpec& spec, LossKind reconstruction,
                                    const TrainingSchedule& schedule, Rng& rng) {
    spec.validate();
    if (data.cols() != spec.input_dim()) {
        throw ShapeError(fmt::format("pretrain_autoencoder: data {} vs input dimension {}", shape_string(data),
                                     spec.input_dim()));
    }
    if (data.rows() == 0) throw ShapeError("pretrain_autoencoder: no rows");
    if (reconstruction != LossKind::mse && reconstruction != LossKind::mae) {
        throw DomainError("pretrain_autoencoder: reconstruction loss must be mse or mae");
    }

    PretrainResult result{make_autoencoder(spec, rng), {}};
    auto& encoder = result.model.encoder.layers;
    auto& decoder = result.model.decoder;
    auto enc_states = make_states(encoder, schedule.adam, "encoder");
    auto dec_states = make_states(decoder, schedule.adam, "decoder");

    for (std::size_t epoch = 0; epoch < schedule.pretrain_epochs; ++epoch) {
        double total = 0.0;
        for (const auto& batch : make_batches(data.rows(), schedule.batch_size, rng)) {
            const Matrix clean = select_rows(data, batch);
            const Matrix noisy = gaussian_corrupt(clean, spec.corruption_sigma, rng);
            const StackTrace enc_trace = forward_stack(encoder, noisy);
            const StackTrace dec_trace = forward_stack(decoder, enc_trace.output);
            const LossResult loss = loss_and_grad(reconstruction, dec_trace.output, clean);
            check_finite_loss(loss.loss, "pretrain", epoch);
            const StackGradients dec_grads = backward_stack(decoder, dec_trace, loss.grad, true);
            const StackGradients enc_grads = backward_stack(encoder, enc_trace, dec_grads.grad_input);
            apply_updates(decoder, dec_grads, dec_states);
            apply_updates(encoder, enc_grads, enc_states);
            total += loss.loss * static_cast<double>(batch.size());
        }
        result.loss_history.push_back(total / static_cast<double>(data.rows()));
    }
    return result;
}

TransferResult transfer_train(const AutoencoderModel& autoencoder, const Matrix& data, std::span<const int> labels,
                              const TrainingSchedule& schedule, Rng& rng) {
    check_binary_labels(labels, data.rows());
    TransferResult result;
    result.encoder = autoencoder.encoder;
    auto& layers = result.encoder.layers;
    for (std::size_t i = 0; i < layers.size(); ++i) layers[i].trainable = i != 0;
    // A zero head passes no gradient to the embedding on the first step, so
    // the head settles before the relu bottleneck moves.
    result.head.layer = make_dense(result.encoder.embedding_dim(), 2, Activation::softmax, rng);
    std::fill(result.head.layer.weights.values().begin(), result.head.layer.weights.values().end(), 0.0);
    DenseLayer& head = result.head.layer;

    auto enc_states = make_states(layers, schedule.adam, "encoder");
    AdamState head_w = make_adam_state(schedule.adam, head.weights.size(), "classifier.weights");
    AdamState head_b = make_adam_state(schedule.adam, head.bias.size(), "classifier.bias");
    const Matrix targets = one_hot(labels);

    for (std::size_t epoch = 0; epoch < schedule.transfer_epochs; ++epoch) {
        double total = 0.0;
        for (const auto& batch : make_batches(data.rows(), schedule.batch_size, rng)) {
            const StackTrace trace = forward_stack(layers, select_rows(data, batch));
            const DenseForward head_fwd = dense_forward(head, trace.output);
            const LossResult loss = softmax_cross_entropy(head_fwd.cache, select_rows(targets, batch));
            check_finite_loss(loss.loss, "transfer", epoch);
            const DenseGradients head_grads = affine_backward(head, loss.grad, trace.output);
            const StackGradients enc_grads = backward_stack(layers, trace, head_grads.grad_input);
            adam_step(head_w, head.weights.values(), head_grads.grad_weights.values());
            adam_step(head_b, head.bias, head_grads.grad_bias);
            apply_updates(layers, enc_grads, enc_states);
            total += loss.loss * static_cast<double>(batch.size());
        }
        result.loss_history.push_back(total / static_cast<double>(data.rows()));
    }
    return result;
}

ClusterResult cluster_finetune(const EncoderModel& encoder, const Matrix& data, std::size_t k,
                               const TrainingSchedule& schedule, Rng& rng, const ClusterObserver& observer) {
    if (k < 2) throw DomainError("cluster_finetune: k must be at least 2");
    ClusterResult result;
    result.encoder = encoder;
    auto& layers = result.encoder.layers;
    for (auto& layer : layers) layer.trainable = true;

    Rng kmeans_rng = rng.derive("kmeans");
    const auto km = analysis::kmeans(encode(result.encoder, data), k, kmeans_rng);
    result.head = ClusterHead{km.centroids, schedule.alpha};

    auto enc_states = make_states(layers, schedule.adam, "encoder");
    AdamState centroid_state = make_adam_state(schedule.adam, result.head.centroids.size(), "centroids");
    std::vector<std::size_t> previous;

    for (std::size_t epoch = 0; epoch < schedule.cluster_epochs; ++epoch) {
        const Matrix q_full = soft_assign(encode(result.encoder, data), result.head);
        const Matrix p_full = target_distribution(q_full);
        if (observer) observer(epoch, q_full, p_full);

        auto assignments = hard_assignments(q_full);
        if (schedule.early_stop_tolerance > 0.0 && !previous.empty()) {
            std::size_t changed = 0;
            for (std::size_t i = 0; i < assignments.size(); ++i) changed += assignments[i] != previous[i];
            if (static_cast<double>(changed) < schedule.early_stop_tolerance * static_cast<double>(data.rows())) {
                result.stopped_early = true;
                break;
            }
        }
        previous = std::move(assignments);

        double total = 0.0;
        for (const auto& batch : make_batches(data.rows(), schedule.batch_size, rng)) {
            const StackTrace trace = forward_stack(layers, select_rows(data, batch));
            const Matrix q = soft_assign(trace.output, result.head);
            const LossResult loss = loss_and_grad(LossKind::kl_divergence, q, select_rows(p_full, batch));
            check_finite_loss(loss.loss, "cluster", epoch);
            const SoftAssignGradients sg = soft_assign_backward(trace.output, result.head, q, loss.grad);
            const StackGradients enc_grads = backward_stack(layers, trace, sg.grad_embedding);
            apply_updates(layers, enc_grads, enc_states);
            adam_step(centroid_state, result.head.centroids.values(), sg.grad_centroids.values());
            total += loss.loss * static_cast<double>(batch.size());
        }
        result.loss_history.push_back(total / static_cast<double>(data.rows()));
    }
    return result;
}

Matrix classify(const EncoderModel& encoder, const ClassifierHead& head, const Matrix& data) {
    return dense_forward(head.layer, encode(encoder, data)).output;
}

double permutation_accuracy(std::span<const std::size_t> clusters, std::span<const int> labels) {
    if (clusters.size() != labels.size()) throw ShapeError("permutation_accuracy: size mismatch");
    if (clusters.empty()) return 0.0;
    std::size_t width = 0;
    for (std::size_t c : clusters) width = std::max(width, c + 1);
    for (int l : labels) {
        if (l < 0) throw DomainError("permutation_accuracy: negative label");
        width = std::max(width, static_cast<std::size_t>(l) + 1);
    }
    if (width > 8) throw DomainError("permutation_accuracy: at most 8 groups supported");
    std::vector<std::vector<std::size_t>> counts(width, std::vector<std::size_t>(width, 0));
    for (std::size_t i = 0; i < clusters.size(); ++i) ++counts[clusters[i]][static_cast<std::size_t>(labels[i])];
    std::vector<std::size_t> perm(width);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::size_t best = 0;
    do {
        std::size_t hits = 0;
        for (std::size_t c = 0; c < width; ++c) hits += counts[c][perm[c]];
        best = std::max(best, hits);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(clusters.size());
}

PhaseReport run_dec(const Matrix& data, std::span<const int> eval_labels, const EncoderSpec& spec,
                    const TrainingSchedule& schedule, std::size_t k, Rng& rng, const ClusterObserver& observer) {
    schedule.validate();
    PhaseReport report;
    auto pre = pretrain_autoencoder(data, spec, LossKind::mse, schedule, rng);
    report.pretrain_loss = std::move(pre.loss_history);
    report.autoencoder = std::move(pre.model);
    report.embedding_pretrain = encode(report.autoencoder.encoder, data);

    auto clustered = cluster_finetune(report.autoencoder.encoder, data, k, schedule, rng, observer);
    report.cluster_loss = std::move(clustered.loss_history);
    report.stopped_early = clustered.stopped_early;
    report.final_encoder = std::move(clustered.encoder);
    report.cluster_head = std::move(clustered.head);
    report.embedding_final = encode(report.final_encoder, data);
    if (!eval_labels.empty()) {
        const auto assigned = hard_assignments(soft_assign(report.embedding_final, report.cluster_head));
        report.label_agreement = permutation_accuracy(assigned, eval_labels);
    }
    return report;
}

PhaseReport run_dsec(const Matrix& data, std::span<const int> labels, const EncoderSpec& spec,
                     const TrainingSchedule& schedule, std::size_t k, Rng& rng, const ClusterObserver& observer) {
    schedule.validate();
    check_binary_labels(labels, data.rows());
    PhaseReport report;
    auto pre = pretrain_autoencoder(data, spec, LossKind::mae, schedule, rng);
    report.pretrain_loss = std::move(pre.loss_history);
    report.autoencoder = std::move(pre.model);
    report.embedding_pretrain = encode(report.autoencoder.encoder, data);

    auto transfer = transfer_train(report.autoencoder, data, labels, schedule, rng);
    report.transfer_loss = std::move(transfer.loss_history);
    report.embedding_transfer = encode(transfer.encoder, data);
    report.classifier_probabilities = classify(transfer.encoder, transfer.head, data);

    auto clustered = cluster_finetune(transfer.encoder, data, k, schedule, rng, observer);
    report.transfer_encoder = std::move(transfer.encoder);
    report.classifier = std::move(transfer.head);
    report.cluster_loss = std::move(clustered.loss_history);
    report.stopped_early = clustered.stopped_early;
    report.final_encoder = std::move(clustered.encoder);
    report.cluster_head = std::move(clustered.head);
    report.embedding_final = encode(report.final_encoder, data);
    const auto assigned = hard_assignments(soft_assign(report.embedding_final, report.cluster_head));
    report.label_agreement = permutation_accuracy(assigned, labels);
    return report;
}

} // namespace dsec::model
