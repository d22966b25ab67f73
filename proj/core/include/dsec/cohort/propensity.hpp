#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "dsec/cohort/patient_matrix.hpp"
#include "dsec/nn/matrix.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::cohort {

struct PropensityOptions {
    std::size_t iterations = 500;
    double learning_rate = 0.05;
};

inline constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

struct MatchResult {
    std::vector<std::size_t> control_for_case;  // index into controls, or kUnmatched
    std::vector<std::size_t> matched_controls;  // ascending
    std::vector<double> case_scores;
    std::vector<double> control_scores;
    std::size_t unmatched_cases = 0;
};

/// Propensity score matching. A logistic regression of case membership on
/// the (standardized) covariates is fitted by full-batch Adam with a two-way
/// softmax layer; each case, visited in an order shuffled by `rng`, takes the
/// unused control with the nearest score (ties to the lower index). With fewer
/// controls than cases the surplus cases stay unmatched.
MatchResult propensity_match(const Matrix& case_covariates, const Matrix& control_covariates, Rng& rng,
                             const PropensityOptions& options = {});

/// Cases plus their matched controls, matched on age and sex, in original
/// row order.
PatientMatrix match_cohort(const PatientMatrix& m, Rng& rng, MatchResult* result = nullptr,
                           const PropensityOptions& options = {});

/// |mean_a − mean_b| / √((var_a + var_b) / 2)
double standardized_mean_difference(std::span<const double> a, std::span<const double> b);

} // namespace dsec::cohort
