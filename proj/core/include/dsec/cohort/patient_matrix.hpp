#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsec/analysis/enrichment.hpp"
#include "dsec/cohort/admissions.hpp"
#include "dsec/nn/matrix.hpp"

namespace dsec::cohort {

/// One row per patient. Missing cells hold 0 in `features` and 0 in `mask`.
struct PatientMatrix {
    std::vector<std::string> patient_ids;
    Matrix features;
    std::vector<std::uint8_t> mask;  // row-major, 1 = observed
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<analysis::CodeSet> codes;
    std::vector<double> age;
    std::vector<int> sex;
    std::vector<int> subgroup;  // planted subgroup for synthetic cohorts, −1 otherwise

    std::size_t rows() const noexcept { return features.rows(); }
    std::size_t cols() const noexcept { return features.cols(); }
    bool present(std::size_t r, std::size_t c) const noexcept { return mask[r * cols() + c] != 0; }

    /// Throws ShapeError when the parallel arrays disagree.
    void validate() const;
};

PatientMatrix build_patient_matrix(std::span<const AdmissionRecord> selected, std::span<const std::string> features);

/// Rows `rows` in the given order.
PatientMatrix subset_rows(const PatientMatrix& m, std::span<const std::size_t> rows);

struct FilterOptions {
    double min_feature_presence = 0.6;  // keep a feature only if present in MORE than this fraction
    double min_case_coverage = 0.6;     // drop a patient if LESS than this fraction of features present
};

struct FilterReport {
    std::vector<std::string> dropped_features;
    std::vector<std::string> dropped_patients;
};

/// Drops sparse features, then sparse patients, repeating until neither step
/// removes anything. Thresholds are strict as documented on FilterOptions.
/// Throws DomainError if every feature would be dropped.
PatientMatrix filter_features_and_cases(const PatientMatrix& m, const FilterOptions& options = {},
                                        FilterReport* report = nullptr);

/// Mean imputation and z-scoring with statistics from training rows only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<bool> zero_variance;  // such features map to 0

    /// Statistics over `train_rows`: mean of observed values, population
    /// standard deviation after imputing missing cells with that mean.
    static Standardizer fit(const PatientMatrix& m, std::span<const std::size_t> train_rows);

    /// Imputes and standardizes the given rows.
    Matrix transform(const PatientMatrix& m, std::span<const std::size_t> rows) const;
    Matrix transform(const PatientMatrix& m) const;
};

/// Preprocessed matrix CSV: patient_id,label,<features...>,codes. Missing
/// cells are empty; codes are ';'-separated.
void write_matrix_csv(std::ostream& out, const PatientMatrix& m);
PatientMatrix read_matrix_csv(std::istream& in);
PatientMatrix read_matrix_csv(const std::filesystem::path& path);

} // namespace dsec::cohort
