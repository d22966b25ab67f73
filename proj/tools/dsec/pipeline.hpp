#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include <nlohmann/json.hpp>

#include "artifacts.hpp"
#include "dsec/model/checkpoint.hpp"
#include "run_config.hpp"

namespace dsec::cli {

/// Weights and preprocessing state recovered from a model checkpoint.
struct TrainedModel {
    model::Variant variant = model::Variant::dsec;
    cohort::Standardizer standardizer;
    model::EncoderModel encoder;                        // after clustering
    std::optional<model::EncoderModel> transfer_encoder;  // DSEC only
    std::optional<model::ClassifierHead> classifier;      // DSEC only
    model::ClusterHead cluster_head;
};

model::Checkpoint to_checkpoint(const model::PhaseReport& report, const cohort::Standardizer& standardizer,
                                model::Variant variant, const std::string& fingerprint, std::uint64_t seed);
TrainedModel from_checkpoint(const model::Checkpoint& checkpoint, const RunConfig& config);

std::string variant_name(model::Variant v);
model::Variant variant_from_name(const std::string& name);

/// One stage per subcommand. Each reads its inputs from the output directory,
/// writes its artifacts there and records them in the manifest.
class Pipeline {
public:
    explicit Pipeline(RunConfig config);

    void synth();
    void preprocess();
    void train(model::Variant variant);
    void embed(model::Variant variant);
    void cluster(model::Variant variant);
    void enrich(model::Variant variant);
    nlohmann::json evaluate();
    void report();

    const RunConfig& config() const { return config_; }
    const Workspace& workspace() const { return ws_; }

private:
    struct Cohort {
        cohort::PatientMatrix matrix;
        cohort::Split split;
    };
    Cohort load_cohort() const;
    TrainedModel load_model(model::Variant variant) const;
    void train_and_save(model::Variant variant, const Cohort& cohort);
    std::string ckpt_name(model::Variant v) const { return "model_" + variant_name(v) + ".ckpt"; }

    RunConfig config_;
    std::string fingerprint_;
    Workspace ws_;
};

/// Runs every oracle suite, prints one PASS/FAIL line each and returns true
/// when all passed.
bool run_selftest(std::uint64_t seed, std::ostream& out);

} // namespace dsec::cli
