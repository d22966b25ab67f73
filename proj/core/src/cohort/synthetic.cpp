#include "dsec/cohort/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dsec/error.hpp"
#include "dsec/nn/rng.hpp"

namespace dsec::cohort {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return out;
}

bool positive_semidefinite(const Matrix& cov) {
    const Eigen::MatrixXd c = to_eigen(cov);
    if (!c.isApprox(c.transpose(), 1e-12)) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return ev.minCoeff() >= -1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
}

// Symmetric square root V·sqrt(Λ)·Vᵀ, negative round-off eigenvalues clamped.
Matrix covariance_root(const Matrix& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(cov));
    const Eigen::VectorXd root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd a = solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose();
    Matrix out(cov.rows(), cov.cols());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> sizes(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = weights[i] / sum * static_cast<double>(total);
        sizes[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += sizes[i];
        remainders.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++sizes[remainders[r % remainders.size()].second];
    return sizes;
}

} // namespace

void SyntheticSpec::validate() const {
    std::vector<std::string> problems;
    if (n_patients == 0) problems.emplace_back("n_patients must be positive");
    if (n_features == 0) problems.emplace_back("n_features must be positive");
    if (!(noise_sd >= 0.0)) problems.emplace_back("noise_sd must be non-negative");
    if (!(missingness_rate >= 0.0 && missingness_rate < 1.0)) problems.emplace_back("missingness_rate must lie in [0, 1)");
    if (!(age_sd >= 0.0)) problems.emplace_back("age_sd must be non-negative");
    if (!nuisance_loadings.empty() && nuisance_loadings.rows() != n_features) {
        problems.push_back(fmt::format("nuisance_loadings has {} rows, expected {}", nuisance_loadings.rows(), n_features));
    }
    if (subgroups.empty()) problems.emplace_back("at least one subgroup is required");
    bool has_case = false, has_control = false;
    for (const auto& g : subgroups) {
        if (g.label == 1) has_case = true;
        else if (g.label == 0) has_control = true;
        else problems.push_back(fmt::format("subgroup '{}': label {} is not binary", g.name, g.label));
        if (!(g.weight > 0.0)) problems.push_back(fmt::format("subgroup '{}': weight must be positive", g.name));
        if (g.mean.size() != n_features) {
            problems.push_back(fmt::format("subgroup '{}': mean has {} entries, expected {}", g.name, g.mean.size(), n_features));
        }
        if (!g.covariance.empty()) {
            if (g.covariance.rows() != n_features || g.covariance.cols() != n_features) {
                problems.push_back(fmt::format("subgroup '{}': covariance is {}, expected {}x{}", g.name,
                                               shape_string(g.covariance), n_features, n_features));
            } else if (!all_finite(g.covariance) || !positive_semidefinite(g.covariance)) {
                problems.push_back(fmt::format("subgroup '{}': covariance is not positive semi-definite", g.name));
            }
        }
    }
    if (!subgroups.empty() && !(has_case && has_control)) problems.emplace_back("both classes need a subgroup");
    for (const auto& c : codes) {
        if (c.prevalence.size() != subgroups.size()) {
            problems.push_back(fmt::format("code '{}': {} prevalences for {} subgroups", c.code, c.prevalence.size(),
                                           subgroups.size()));
        }
        for (double p : c.prevalence) {
            if (!(p >= 0.0 && p <= 1.0)) {
                problems.push_back(fmt::format("code '{}': prevalence {} outside [0, 1]", c.code, p));
                break;
            }
        }
    }
    if (!problems.empty()) throw DomainError(fmt::format("invalid synthetic spec: {}", fmt::join(problems, "; ")));
}

SyntheticSpec default_synthetic_spec(std::uint64_t seed) {
    constexpr std::size_t d = 13;
    constexpr double nuisance_scale = 3.0;
    constexpr double class_gap = 2.0;      // along e0 − e3, in noise sd
    constexpr double factor_shift = 0.4;   // along factor 0, in factor sd
    constexpr double subgroup_gap = 3.0;

    SyntheticSpec spec;
    spec.seed = seed;
    spec.n_features = d;
    spec.nuisance_loadings = Matrix(d, 3);
    for (std::size_t j = 0; j < d; ++j) spec.nuisance_loadings(j, j % 3) = nuisance_scale;

    // Contrasts between features sharing a factor cancel it exactly.
    auto contrast = [](std::size_t i, std::size_t j) {
        std::vector<double> v(d, 0.0);
        v[i] = std::numbers::sqrt2 / 2.0;
        v[j] = -std::numbers::sqrt2 / 2.0;
        return v;
    };
    const auto u_class = contrast(0, 3);
    const auto v1 = contrast(1, 4);
    const auto v2 = contrast(2, 5);
    const auto v3 = contrast(6, 9);

    auto make = [&](std::string name, int label, double weight, double a, double b, double c) {
        SubgroupSpec g;
        g.name = std::move(name);
        g.label = label;
        g.weight = weight;
        g.mean.assign(d, 0.0);
        const double sign = label == 1 ? 0.5 : -0.5;
        for (std::size_t j = 0; j < d; ++j) {
            g.mean[j] = sign * class_gap * u_class[j] + sign * factor_shift * spec.nuisance_loadings(j, 0) + a * v1[j] +
                        b * v2[j] + c * v3[j];
        }
        return g;
    };
    const double s = subgroup_gap;
    const double h = s * std::numbers::sqrt3 / 2.0;
    spec.subgroups = {
        make("hf_a", 1, 1.0 / 6.0, s, 0.0, 0.0),
        make("hf_b", 1, 1.0 / 6.0, -s / 2.0, h, 0.0),
        make("hf_c", 1, 1.0 / 6.0, -s / 2.0, -h, 0.0),
        make("control_a", 0, 0.25, 0.0, 0.0, s),
        make("control_b", 0, 0.25, 0.0, 0.0, -s),
    };

    auto marker = [](std::string code, std::vector<double> prevalence) { return CodeSpec{std::move(code), std::move(prevalence)}; };
    spec.codes = {
        marker("I50.0", {0.8, 0.8, 0.8, 0.1, 0.1}),
        marker("E78.0", {0.1, 0.1, 0.1, 0.8, 0.8}),
        marker("I42.0", {0.8, 0.1, 0.1, 0.1, 0.1}),
        marker("I27.2", {0.1, 0.8, 0.1, 0.1, 0.1}),
        marker("N18.3", {0.1, 0.1, 0.8, 0.1, 0.1}),
        marker("J44.9", {0.1, 0.1, 0.1, 0.8, 0.1}),
        marker("E11.9", {0.1, 0.1, 0.1, 0.1, 0.8}),
        marker("Z92.1", {0.3, 0.3, 0.3, 0.3, 0.3}),
        marker("R05", {0.3, 0.3, 0.3, 0.3, 0.3}),
        marker("K21.9", {0.3, 0.3, 0.3, 0.3, 0.3}),
    };
    return spec;
}

SyntheticSpec null_synthetic_spec(std::uint64_t seed) {
    SyntheticSpec spec = default_synthetic_spec(seed);
    spec.class_separation = 0.0;
    spec.age_mean_case = spec.age_mean_control;
    for (auto& c : spec.codes) std::fill(c.prevalence.begin(), c.prevalence.end(), 0.3);
    return spec;
}

PatientMatrix generate_synthetic_cohort(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t d = spec.n_features;
    const std::size_t n = spec.n_patients;
    const std::size_t n_factors = spec.nuisance_loadings.empty() ? 0 : spec.nuisance_loadings.cols();
    Rng root(spec.seed);
    Rng feature_rng = root.derive("synthetic.features");
    Rng code_rng = root.derive("synthetic.codes");
    Rng missing_rng = root.derive("synthetic.missing");
    Rng demo_rng = root.derive("synthetic.demographics");
    Rng order_rng = root.derive("synthetic.order");

    std::vector<double> weights;
    for (const auto& g : spec.subgroups) weights.push_back(g.weight);
    const auto sizes = apportion(weights, n);

    std::vector<int> group_of;
    for (std::size_t g = 0; g < sizes.size(); ++g) group_of.insert(group_of.end(), sizes[g], static_cast<int>(g));
    order_rng.shuffle(std::span<int>(group_of));

    std::vector<Matrix> roots(spec.subgroups.size());
    for (std::size_t g = 0; g < spec.subgroups.size(); ++g) {
        if (!spec.subgroups[g].covariance.empty()) roots[g] = covariance_root(spec.subgroups[g].covariance);
    }

    PatientMatrix m;
    m.feature_names = d == default_feature_names().size() ? default_feature_names() : std::vector<std::string>{};
    for (std::size_t j = m.feature_names.size(); j < d; ++j) m.feature_names.push_back(fmt::format("x{}", j + 1));
    m.features = Matrix(n, d);
    m.mask.assign(n * d, 1);

    std::vector<double> factor(n_factors), z(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = static_cast<std::size_t>(group_of[i]);
        const SubgroupSpec& sub = spec.subgroups[g];
        for (auto& f : factor) f = feature_rng.normal();
        for (auto& v : z) v = feature_rng.normal();
        for (std::size_t j = 0; j < d; ++j) {
            double x = spec.class_separation * sub.mean[j];
            for (std::size_t k = 0; k < n_factors; ++k) x += spec.nuisance_loadings(j, k) * factor[k];
            if (roots[g].empty()) {
                x += spec.noise_sd * z[j];
            } else {
                for (std::size_t k = 0; k < d; ++k) x += roots[g](j, k) * z[k];
            }
            m.features(i, j) = x;
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (spec.missingness_rate > 0.0 && missing_rng.bernoulli(spec.missingness_rate)) {
                m.features(i, j) = 0.0;
                m.mask[i * d + j] = 0;
            }
        }
        std::vector<std::string> codes;
        for (const auto& c : spec.codes) {
            if (code_rng.bernoulli(c.prevalence[g])) codes.push_back(c.code);
        }
        m.codes.push_back(analysis::make_code_set(std::move(codes)));
        m.labels.push_back(sub.label);
        m.subgroup.push_back(static_cast<int>(g));
        const double age_mean = sub.label == 1 ? spec.age_mean_case : spec.age_mean_control;
        m.age.push_back(std::max(18.0, std::round(demo_rng.normal(age_mean, spec.age_sd))));
        m.sex.push_back(demo_rng.bernoulli(0.5) ? 1 : 0);
        m.patient_ids.push_back(fmt::format("P{:05d}", i + 1));
    }
    return m;
}

std::vector<AdmissionRecord> to_admissions(const PatientMatrix& m, std::uint64_t seed) {
    m.validate();
    Rng rng = Rng(seed).derive("synthetic.admissions");
    std::vector<AdmissionRecord> out;
    out.reserve(2 * m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        AdmissionRecord index;
        index.patient_id = m.patient_ids[i];
        index.admission_id = m.patient_ids[i] + "-2";
        index.timestamp = "2020-03-01T08:00:00";
        index.age = m.age[i];
        index.sex = m.sex[i];
        index.label = m.labels[i];
        std::vector<std::size_t> present;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (!m.present(i, j)) continue;
            index.readings[m.feature_names[j]] = {m.features(i, j)};
            present.push_back(j);
        }
        index.codes = m.codes[i];
        if (index.label == 1) {
            auto codes = index.codes;
            codes.emplace_back("I50.9");
            index.codes = analysis::make_code_set(std::move(codes));
        }

        // Earlier admission: unrelated readings on strictly fewer features.
        AdmissionRecord early = index;
        early.admission_id = m.patient_ids[i] + "-1";
        early.timestamp = "2020-01-01T08:00:00";
        early.readings.clear();
        early.codes.clear();
        const std::size_t n_early = present.size() / 2;
        rng.shuffle(std::span<std::size_t>(present));
        for (std::size_t k = 0; k < n_early; ++k) {
            early.readings[m.feature_names[present[k]]] = {rng.normal(), rng.normal()};
        }
        out.push_back(std::move(early));
        out.push_back(std::move(index));
    }
    return out;
}

} // namespace dsec::cohort
