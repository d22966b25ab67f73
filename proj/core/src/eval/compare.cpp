#include "dsec/eval/compare.hpp"

#include <fmt/format.h>

#include "dsec/analysis/pca.hpp"
#include "dsec/error.hpp"

namespace dsec::eval {

model::EncoderSpec ModelShape::spec(std::size_t n_features, model::Variant variant) const {
    auto spec = model::make_encoder_spec(n_features, hidden, embedding_dim, variant, corruption_sigma);
    spec.init = init;
    const auto& acts = variant == model::Variant::dsec ? dsec_activations : dec_activations;
    if (!acts.empty()) spec.activations = acts;
    spec.validate();
    return spec;
}

std::uint64_t split_seed(std::uint64_t seed) { return derive_seed(seed, "split"); }

std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream) { return derive_seed(seed, stream); }

PreparedData prepare_data(const cohort::PatientMatrix& m, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows) {
    const auto standardizer = cohort::Standardizer::fit(m, train_rows);
    PreparedData data;
    data.train = standardizer.transform(m, train_rows);
    data.test = standardizer.transform(m, test_rows);
    for (std::size_t r : train_rows) data.y_train.push_back(m.labels[r]);
    for (std::size_t r : test_rows) data.y_test.push_back(m.labels[r]);
    return data;
}

model::PhaseReport train_variant(model::Variant variant, const Matrix& train, std::span<const int> y_train,
                                 const ComparisonConfig& config, std::uint64_t seed) {
    const auto spec = config.shape.spec(train.cols(), variant);
    if (variant == model::Variant::dsec) {
        Rng rng(stream_seed(seed, "dsec"));
        return model::run_dsec(train, y_train, spec, config.schedule, config.k, rng);
    }
    Rng rng(stream_seed(seed, "dec"));
    return model::run_dec(train, y_train, spec, config.schedule, config.k, rng);
}

std::vector<double> pca_forest_scores(const PreparedData& data, const ComparisonConfig& config, std::uint64_t seed) {
    const auto pca = analysis::pca_fit(data.train, config.pca_dims);
    Rng rng(stream_seed(seed, "forest.pca"));
    const auto forest = forest_train(analysis::pca_transform(pca, data.train), data.y_train, config.forest, rng);
    return forest_predict(forest, analysis::pca_transform(pca, data.test));
}

std::vector<double> embedding_forest_scores(const model::EncoderModel& encoder, const PreparedData& data,
                                            const ComparisonConfig& config, std::uint64_t seed) {
    Rng rng(stream_seed(seed, "forest.dec"));
    const auto forest = forest_train(model::encode(encoder, data.train), data.y_train, config.forest, rng);
    return forest_predict(forest, model::encode(encoder, data.test));
}

std::vector<double> classifier_scores(const model::EncoderModel& encoder, const model::ClassifierHead& head,
                                      const Matrix& test) {
    const Matrix probs = model::classify(encoder, head, test);
    std::vector<double> scores(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) scores[i] = probs(i, 1);
    return scores;
}

MethodResults evaluate_methods(const PreparedData& data, const ComparisonConfig& config, std::uint64_t seed) {
    MethodResults out;
    const auto dsec = train_variant(model::Variant::dsec, data.train, data.y_train, config, seed);
    out.dsec = roc_auc(classifier_scores(dsec.final_encoder, *dsec.classifier, data.test), data.y_test);
    out.dsec_phase2 = roc_auc(classifier_scores(*dsec.transfer_encoder, *dsec.classifier, data.test), data.y_test);
    const auto dec = train_variant(model::Variant::dec, data.train, data.y_train, config, seed);
    out.dec_rf = roc_auc(embedding_forest_scores(dec.final_encoder, data, config, seed), data.y_test);
    out.pca_rf = roc_auc(pca_forest_scores(data, config, seed), data.y_test);
    return out;
}

ComparisonReport compare_methods(const cohort::PatientMatrix& m, const ComparisonConfig& config, std::uint64_t seed) {
    m.validate();
    cohort::SplitSpec split_spec = config.split;
    split_spec.seed = split_seed(seed);
    const auto split = cohort::stratified_split(m.labels, split_spec);

    ComparisonReport report;
    report.seed = seed;
    report.n_train = split.train.size();
    report.n_test = split.test.size();
    report.test = evaluate_methods(prepare_data(m, split.train, split.test), config, seed);
    if (config.cross_validate) {
        for (std::size_t f = 0; f < split.folds.size(); ++f) {
            const auto [fit_rows, val_rows] = split.fold(f);
            const auto results = evaluate_methods(prepare_data(m, fit_rows, val_rows), config,
                                                  stream_seed(seed, fmt::format("fold.{}", f)));
            report.folds.push_back({f, results.dsec.auc, results.dec_rf.auc, results.pca_rf.auc});
        }
    }
    return report;
}

} // namespace dsec::eval
