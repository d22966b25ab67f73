#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsec/analysis/enrichment.hpp"
#include "dsec/cohort/patient_matrix.hpp"
#include "dsec/cohort/synthetic.hpp"
#include "dsec/error.hpp"
#include "dsec/eval/compare.hpp"

namespace dsec::cli {

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct SyntheticConfig {
    std::size_t n_patients = 2000;
    double class_separation = 1.0;
    double missingness_rate = 0.1;
    bool null_model = false;  // flat code prevalences
};

struct DataConfig {
    std::string source = "synthetic";  // "synthetic" or "csv"
    std::string path;                  // admissions CSV when source = csv
    SyntheticConfig synthetic;
};

struct PreprocessConfig {
    cohort::FilterOptions filter;
    bool propensity_match = true;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir = "dsec_out";
    DataConfig data;
    PreprocessConfig preprocess;
    eval::ModelShape model;
    model::TrainingSchedule training;
    std::size_t k = 2;
    cohort::SplitSpec split;
    eval::ForestOptions forest;
    std::size_t pca_dims = 3;
    bool cross_validate = false;
    analysis::HierarchyOptions enrichment;

    eval::ComparisonConfig comparison() const;
    cohort::SyntheticSpec synthetic_spec() const;
};

/// Overlays the keys present in `j` onto `base`. Unknown keys, wrong types
/// and out-of-range values are collected and thrown together as ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Complete configuration, every key present.
nlohmann::json config_to_json(const RunConfig& config);

/// Every violated constraint, empty when the configuration is usable.
std::vector<std::string> config_problems(const RunConfig& config);
/// Throws ConfigError listing every violated constraint.
void validate_config(const RunConfig& config);

/// 16 hex digits identifying everything except the output directory.
std::string fingerprint(const RunConfig& config);

} // namespace dsec::cli
