#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsec/cohort/patient_matrix.hpp"
#include "dsec/cohort/split.hpp"
#include "dsec/eval/forest.hpp"
#include "dsec/eval/roc.hpp"
#include "dsec/model/training.hpp"

namespace dsec::eval {

// AUCs reported for the full-size clinical cohort, shown beside ours in reports.
inline constexpr double kReferenceAucDsec = 0.84;
inline constexpr double kReferenceAucDecRf = 0.73;
inline constexpr double kReferenceAucPcaRf = 0.66;

struct ModelShape {
    std::vector<std::size_t> hidden{64, 32};
    std::size_t embedding_dim = 3;
    double corruption_sigma = 0.1;
    WeightInit init = WeightInit::glorot_uniform;
    // Per encoder layer; empty keeps the variant's default convention.
    std::vector<Activation> dec_activations;
    std::vector<Activation> dsec_activations;

    model::EncoderSpec spec(std::size_t n_features, model::Variant variant) const;
};

struct ComparisonConfig {
    ModelShape shape;
    model::TrainingSchedule schedule;
    std::size_t k = 2;
    ForestOptions forest;
    cohort::SplitSpec split;  // seed is overridden from the run seed
    std::size_t pca_dims = 3;
    bool cross_validate = false;
};

/// Seeds of the independent random streams of a run.
std::uint64_t split_seed(std::uint64_t seed);
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream);

/// Standardized train/test matrices; statistics come from the training rows.
struct PreparedData {
    Matrix train;
    Matrix test;
    std::vector<int> y_train;
    std::vector<int> y_test;
};

PreparedData prepare_data(const cohort::PatientMatrix& m, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows);

/// Trains DEC or DSEC on the given rows with the stream seeded for that
/// variant; DEC ignores the labels.
model::PhaseReport train_variant(model::Variant variant, const Matrix& train, std::span<const int> y_train,
                                 const ComparisonConfig& config, std::uint64_t seed);

std::vector<double> pca_forest_scores(const PreparedData& data, const ComparisonConfig& config, std::uint64_t seed);
std::vector<double> embedding_forest_scores(const model::EncoderModel& encoder, const PreparedData& data,
                                            const ComparisonConfig& config, std::uint64_t seed);
/// Positive-class probability of the classifier head on the test rows.
std::vector<double> classifier_scores(const model::EncoderModel& encoder, const model::ClassifierHead& head,
                                      const Matrix& test);

struct MethodResults {
    RocCurve dsec;         // phase-3 encoder with the phase-2 head
    RocCurve dsec_phase2;  // phase-2 encoder and head
    RocCurve dec_rf;
    RocCurve pca_rf;
};

/// Trains all three methods on `data.train` and scores `data.test`.
MethodResults evaluate_methods(const PreparedData& data, const ComparisonConfig& config, std::uint64_t seed);

struct FoldMetrics {
    std::size_t fold = 0;
    double auc_dsec = 0.0;
    double auc_dec_rf = 0.0;
    double auc_pca_rf = 0.0;
};

struct ComparisonReport {
    MethodResults test;
    std::vector<FoldMetrics> folds;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t seed = 0;
};

/// Stratified held-out split, then the three-way comparison on the test set
/// and, if requested, on each cross-validation fold of the training rows.
ComparisonReport compare_methods(const cohort::PatientMatrix& m, const ComparisonConfig& config, std::uint64_t seed);

} // namespace dsec::eval
