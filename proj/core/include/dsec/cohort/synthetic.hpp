#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dsec/cohort/admissions.hpp"
#include "dsec/cohort/patient_matrix.hpp"
#include "dsec/nn/matrix.hpp"

namespace dsec::cohort {

struct SubgroupSpec {
    std::string name;
    int label = 0;
    double weight = 1.0;       // relative share of the cohort
    std::vector<double> mean;  // n_features, scaled by class_separation
    Matrix covariance;         // n_features × n_features, or empty for identity noise
};

struct CodeSpec {
    std::string code;
    std::vector<double> prevalence;  // one per subgroup
};

struct SyntheticSpec {
    std::size_t n_patients = 2000;
    std::size_t n_features = 13;
    double class_separation = 1.0;
    double noise_sd = 1.0;
    // Shared latent factors added to every patient regardless of class.
    Matrix nuisance_loadings;  // n_features × n_factors
    std::vector<SubgroupSpec> subgroups;
    std::vector<CodeSpec> codes;
    double missingness_rate = 0.1;
    double age_mean_case = 68.0;
    double age_mean_control = 64.0;
    double age_sd = 10.0;
    std::uint64_t seed = 0;

    /// Throws DomainError listing every problem (bad prevalences, covariance
    /// not positive semi-definite, size mismatches).
    void validate() const;
};

/// The default cohort: 13 features, three shared nuisance factors with large
/// loadings, class and subgroup structure confined to contrasts that cancel
/// the factors (low variance), plus a slight class shift along one factor.
/// Heart-failure patients form three subgroups and controls two; each
/// subgroup has a marker code at 0.8 against 0.1 elsewhere.
SyntheticSpec default_synthetic_spec(std::uint64_t seed = 0);

/// The default spec with class_separation 0 and every code at one flat
/// prevalence, so nothing distinguishes the classes.
SyntheticSpec null_synthetic_spec(std::uint64_t seed = 0);

/// Samples a cohort. Subgroup sizes are the weights apportioned to
/// n_patients by largest remainder; rows are shuffled. Patient ids are
/// "P00001"…; the `subgroup` column holds the planted subgroup index.
PatientMatrix generate_synthetic_cohort(const SyntheticSpec& spec);

/// Expands a cohort into admissions: each patient gets a sparser earlier
/// admission and an index admission holding the sampled values. Heart-failure
/// index admissions carry I50.9 and the earlier one does not, so selection
/// recovers the index admission.
std::vector<AdmissionRecord> to_admissions(const PatientMatrix& m, std::uint64_t seed);

} // namespace dsec::cohort
