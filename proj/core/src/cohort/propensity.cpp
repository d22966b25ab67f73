#include "dsec/cohort/propensity.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dsec/error.hpp"
#include "dsec/nn/adam.hpp"
#include "dsec/nn/dense.hpp"
#include "dsec/nn/loss.hpp"

namespace dsec::cohort {

MatchResult propensity_match(const Matrix& case_covariates, const Matrix& control_covariates, Rng& rng,
                             const PropensityOptions& options) {
    if (case_covariates.rows() == 0) throw DomainError("propensity_match: no cases");
    if (control_covariates.rows() == 0) throw DomainError("propensity_match: no controls");
    if (case_covariates.cols() != control_covariates.cols()) {
        throw ShapeError(fmt::format("propensity_match: case covariates {} vs control covariates {}",
                                     shape_string(case_covariates), shape_string(control_covariates)));
    }
    const std::size_t n_case = case_covariates.rows();
    const std::size_t n_ctrl = control_covariates.rows();
    const std::size_t d = case_covariates.cols();

    Matrix x(n_case + n_ctrl, d);
    Matrix y(n_case + n_ctrl, 2);
    for (std::size_t i = 0; i < n_case; ++i) {
        std::copy_n(case_covariates.row(i).begin(), d, x.row(i).begin());
        y(i, 1) = 1.0;
    }
    for (std::size_t i = 0; i < n_ctrl; ++i) {
        std::copy_n(control_covariates.row(i).begin(), d, x.row(n_case + i).begin());
        y(n_case + i, 0) = 1.0;
    }
    // Standardize covariates so one learning rate suits all of them.
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, c);
        mean /= static_cast<double>(x.rows());
        double var = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, c) - mean) * (x(i, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(x.rows()));
        for (std::size_t i = 0; i < x.rows(); ++i) x(i, c) = sd > 0.0 ? (x(i, c) - mean) / sd : 0.0;
    }

    DenseLayer layer;
    layer.weights = Matrix(d, 2);
    layer.bias.assign(2, 0.0);
    layer.activation = Activation::softmax;
    AdamConfig config;
    config.learning_rate = options.learning_rate;
    AdamState w_state = make_adam_state(config, layer.weights.size(), "propensity.weights");
    AdamState b_state = make_adam_state(config, layer.bias.size(), "propensity.bias");
    for (std::size_t it = 0; it < options.iterations; ++it) {
        const DenseForward fwd = dense_forward(layer, x);
        const LossResult loss = softmax_cross_entropy(fwd.cache, y);
        const DenseGradients g = affine_backward(layer, loss.grad, x);
        adam_step(w_state, layer.weights.values(), g.grad_weights.values());
        adam_step(b_state, layer.bias, g.grad_bias);
    }
    const Matrix probs = dense_forward(layer, x).output;

    MatchResult result;
    for (std::size_t i = 0; i < n_case; ++i) result.case_scores.push_back(probs(i, 1));
    for (std::size_t i = 0; i < n_ctrl; ++i) result.control_scores.push_back(probs(n_case + i, 1));

    std::vector<std::size_t> order(n_case);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<bool> used(n_ctrl, false);
    result.control_for_case.assign(n_case, kUnmatched);
    for (std::size_t ci : order) {
        std::size_t best = kUnmatched;
        double best_gap = 0.0;
        for (std::size_t j = 0; j < n_ctrl; ++j) {
            if (used[j]) continue;
            const double gap = std::abs(result.case_scores[ci] - result.control_scores[j]);
            if (best == kUnmatched || gap < best_gap) {
                best = j;
                best_gap = gap;
            }
        }
        if (best == kUnmatched) {
            ++result.unmatched_cases;
            continue;
        }
        used[best] = true;
        result.control_for_case[ci] = best;
    }
    for (std::size_t j = 0; j < n_ctrl; ++j)
        if (used[j]) result.matched_controls.push_back(j);
    return result;
}

PatientMatrix match_cohort(const PatientMatrix& m, Rng& rng, MatchResult* result, const PropensityOptions& options) {
    m.validate();
    std::vector<std::size_t> cases, controls;
    for (std::size_t i = 0; i < m.rows(); ++i) (m.labels[i] == 1 ? cases : controls).push_back(i);
    auto covariates = [&](const std::vector<std::size_t>& rows) {
        Matrix out(rows.size(), 2);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out(i, 0) = m.age[rows[i]];
            out(i, 1) = m.sex[rows[i]];
        }
        return out;
    };
    MatchResult match = propensity_match(covariates(cases), covariates(controls), rng, options);
    std::vector<bool> keep(m.rows(), false);
    for (std::size_t i : cases) keep[i] = true;
    for (std::size_t j : match.matched_controls) keep[controls[j]] = true;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m.rows(); ++i)
        if (keep[i]) rows.push_back(i);
    if (result) *result = std::move(match);
    return subset_rows(m, rows);
}

double standardized_mean_difference(std::span<const double> a, std::span<const double> b) {
    auto moments = [](std::span<const double> v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::pair(mean, v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0);
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double pooled = std::sqrt((va + vb) / 2.0);
    return pooled > 0.0 ? std::abs(ma - mb) / pooled : 0.0;
}

} // namespace dsec::cohort
