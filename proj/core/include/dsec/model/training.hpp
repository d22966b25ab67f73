#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dsec/model/cluster_head.hpp"
#include "dsec/model/encoder.hpp"
#include "dsec/nn/adam.hpp"
#include "dsec/nn/loss.hpp"

namespace dsec::model {

struct TrainingSchedule {
    std::size_t pretrain_epochs = 50;
    std::size_t transfer_epochs = 10;
    std::size_t cluster_epochs = 200;
    AdamConfig adam;
    std::size_t batch_size = 256;  // 0 = full batch
    /// Stop clustering early once fewer than this fraction of hard assignments
    /// change between target refreshes. 0 disables the check.
    double early_stop_tolerance = 0.0;
    double alpha = 1.0;  // Student's t degrees of freedom

    void validate() const;
};

/// Softmax classification head on top of the embedding (m → 2).
struct ClassifierHead {
    DenseLayer layer;
};

struct PretrainResult {
    AutoencoderModel model;
    std::vector<double> loss_history;
};

struct TransferResult {
    EncoderModel encoder;
    ClassifierHead head;
    std::vector<double> loss_history;
};

/// Receives Q and P at every target refresh during clustering.
using ClusterObserver = std::function<void(std::size_t epoch, const Matrix& q, const Matrix& p)>;

struct ClusterResult {
    EncoderModel encoder;
    ClusterHead head;
    std::vector<double> loss_history;
    bool stopped_early = false;
};

/// Phase 1: de-noising autoencoder. Inputs are corrupted with
/// N(0, spec.corruption_sigma²) each batch; the clean input is the target.
PretrainResult pretrain_autoencoder(const Matrix& data, const EncoderSpec& spec, LossKind reconstruction,
                                    const TrainingSchedule& schedule, Rng& rng);

/// Phase 2: drops the decoder, appends a softmax head, freezes the first
/// encoder layer and trains the rest on cross-entropy against `labels`.
TransferResult transfer_train(const AutoencoderModel& autoencoder, const Matrix& data, std::span<const int> labels,
                              const TrainingSchedule& schedule, Rng& rng);

/// Phase 3: k-means on the current embedding seeds the centroids, then every
/// encoder layer and the centroids minimize KL(P ‖ Q) with P refreshed once
/// per epoch.
ClusterResult cluster_finetune(const EncoderModel& encoder, const Matrix& data, std::size_t k,
                               const TrainingSchedule& schedule, Rng& rng, const ClusterObserver& observer = {});

/// Class probabilities (n × 2) from an encoder and classifier head.
Matrix classify(const EncoderModel& encoder, const ClassifierHead& head, const Matrix& data);

struct PhaseReport {
    std::vector<double> pretrain_loss;
    std::vector<double> transfer_loss;  // empty for DEC
    std::vector<double> cluster_loss;
    bool stopped_early = false;

    Matrix embedding_pretrain;  // Z
    Matrix embedding_transfer;  // Z′ (DSEC only)
    Matrix embedding_final;     // Z″ (or Z after clustering for DEC)

    AutoencoderModel autoencoder;
    std::optional<EncoderModel> transfer_encoder;
    std::optional<ClassifierHead> classifier;
    EncoderModel final_encoder;
    ClusterHead cluster_head;
    Matrix classifier_probabilities;  // training rows, DSEC only

    /// Agreement of hard cluster assignments with evaluation labels, maximized
    /// over label permutations. Only set when labels were supplied.
    std::optional<double> label_agreement;
};

/// DEC: phases 1 and 3 with least-squares reconstruction. `eval_labels`, if
/// non-empty, only feed `label_agreement`.
PhaseReport run_dec(const Matrix& data, std::span<const int> eval_labels, const EncoderSpec& spec,
                    const TrainingSchedule& schedule, std::size_t k, Rng& rng,
                    const ClusterObserver& observer = {});

/// DSEC: phases 1, 2 and 3 with MAE reconstruction.
PhaseReport run_dsec(const Matrix& data, std::span<const int> labels, const EncoderSpec& spec,
                     const TrainingSchedule& schedule, std::size_t k, Rng& rng,
                     const ClusterObserver& observer = {});

/// Fraction of samples whose cluster matches their label under the best
/// one-to-one relabeling of clusters (k ≤ 8).
double permutation_accuracy(std::span<const std::size_t> clusters, std::span<const int> labels);

} // namespace dsec::model
