#include "dsec/selftest/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "dsec/analysis/kmeans.hpp"
#include "dsec/analysis/linkage.hpp"
#include "dsec/model/cluster_head.hpp"
#include "dsec/model/encoder.hpp"
#include "dsec/nn/grad_check.hpp"
#include "dsec/nn/loss.hpp"
#include "dsec/selftest/oracles.hpp"

namespace dsec::selftest {

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kKinkMargin = 1e-3;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = scale * rng.normal();
    return m;
}

Matrix random_distribution(std::size_t rows, std::size_t cols, Rng& rng) {
    return activate(Activation::softmax, random_matrix(rows, cols, rng));
}

Matrix random_one_hot(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) m(i, rng.index(cols)) = 1.0;
    return m;
}

// Moves MAE targets away from the |prediction − target| kink.
void separate_targets(const Matrix& prediction, Matrix& target) {
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double gap = prediction.values()[i] - target.values()[i];
        if (std::abs(gap) < kKinkMargin) target.values()[i] = prediction.values()[i] + (gap < 0 ? kKinkMargin : -kKinkMargin) * 10;
    }
}

// Worst relative error over several parameter blocks.
class Probe {
public:
    explicit Probe(std::function<double()> loss) : loss_(std::move(loss)) {}

    void check(std::span<double> params, std::span<const double> analytic) {
        const auto report = grad_check(loss_, params, analytic, kGradTolerance);
        worst_ = std::max(worst_, report.max_relative_error);
    }
    double worst() const { return worst_; }

private:
    std::function<double()> loss_;
    double worst_ = 0.0;
};

struct Instance {
    std::size_t n;
    std::size_t in;
    std::size_t out;
};

Instance random_shape(Rng& rng) { return {2 + rng.index(4), 2 + rng.index(4), 2 + rng.index(3)}; }

double layer_loss_case(Activation act, LossKind kind, Rng& rng) {
    const auto shape = random_shape(rng);
    std::vector<DenseLayer> layers{make_dense(shape.in, shape.out, act, rng, WeightInit::he_uniform)};
    for (double& b : layers[0].bias) b = 0.1 * rng.normal();
    Matrix x = random_matrix(shape.n, shape.in, rng);
    if (act == Activation::relu) nudge_relu_kinks(layers, x, kKinkMargin);
    DenseLayer& layer = layers[0];

    Matrix target;
    switch (kind) {
    case LossKind::bce: target = random_one_hot(shape.n, shape.out, rng); break;
    case LossKind::kl_divergence: target = random_distribution(shape.n, shape.out, rng); break;
    default: target = random_matrix(shape.n, shape.out, rng); break;
    }
    if (kind == LossKind::mae) separate_targets(dense_forward(layer, x).output, target);

    const auto fwd = dense_forward(layer, x);
    const auto loss = loss_and_grad(kind, fwd.output, target);
    const auto grads = dense_backward(layer, loss.grad, fwd.cache, x);
    Probe probe([&] { return loss_and_grad(kind, dense_forward(layer, x).output, target).loss; });
    probe.check(layer.weights.values(), grads.grad_weights.values());
    probe.check(layer.bias, grads.grad_bias);
    probe.check(x.values(), grads.grad_input.values());
    return probe.worst();
}

double softmax_cross_entropy_case(Rng& rng) {
    const auto shape = random_shape(rng);
    DenseLayer layer = make_dense(shape.in, shape.out, Activation::linear, rng, WeightInit::he_uniform);
    Matrix x = random_matrix(shape.n, shape.in, rng);
    const Matrix target = random_one_hot(shape.n, shape.out, rng);
    const auto fwd = dense_forward(layer, x);
    const auto loss = softmax_cross_entropy(fwd.output, target);
    const auto grads = dense_backward(layer, loss.grad, fwd.cache, x);
    Probe probe([&] { return softmax_cross_entropy(dense_forward(layer, x).output, target).loss; });
    probe.check(layer.weights.values(), grads.grad_weights.values());
    probe.check(layer.bias, grads.grad_bias);
    probe.check(x.values(), grads.grad_input.values());
    return probe.worst();
}

double cluster_head_case(Rng& rng) {
    const std::size_t n = 3 + rng.index(4), m = 2 + rng.index(2), k = 2 + rng.index(2);
    Matrix z = random_matrix(n, m, rng);
    model::ClusterHead head{random_matrix(k, m, rng), rng.index(2) == 0 ? 1.0 : 2.0};
    const Matrix p = model::target_distribution(model::soft_assign(z, head));
    const Matrix q = model::soft_assign(z, head);
    const auto loss = loss_and_grad(LossKind::kl_divergence, q, p);
    const auto grads = model::soft_assign_backward(z, head, q, loss.grad);
    Probe probe([&] { return loss_and_grad(LossKind::kl_divergence, model::soft_assign(z, head), p).loss; });
    probe.check(z.values(), grads.grad_embedding.values());
    probe.check(head.centroids.values(), grads.grad_centroids.values());
    return probe.worst();
}

std::vector<DenseLayer> small_autoencoder(model::Variant variant, std::size_t in, Rng& rng) {
    auto spec = model::make_encoder_spec(in, {5, 4}, 2, variant);
    spec.init = WeightInit::he_uniform;
    auto ae = model::make_autoencoder(spec, rng);
    std::vector<DenseLayer> layers = ae.encoder.layers;
    layers.insert(layers.end(), ae.decoder.begin(), ae.decoder.end());
    for (auto& l : layers)
        for (double& b : l.bias) b = 0.1 * rng.normal();
    return layers;
}

void check_stack(Probe& probe, std::vector<DenseLayer>& layers, const model::StackGradients& grads) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        probe.check(layers[i].weights.values(), grads.weights[i].values());
        probe.check(layers[i].bias, grads.bias[i]);
    }
}

double autoencoder_case(model::Variant variant, LossKind kind, Rng& rng) {
    const std::size_t n = 3 + rng.index(3), in = 3 + rng.index(3);
    auto layers = small_autoencoder(variant, in, rng);
    Matrix x = random_matrix(n, in, rng);
    nudge_relu_kinks(layers, x, kKinkMargin);
    Matrix target = random_matrix(n, in, rng);
    if (kind == LossKind::mae) separate_targets(model::forward_stack(layers, x).output, target);
    const auto trace = model::forward_stack(layers, x);
    const auto loss = loss_and_grad(kind, trace.output, target);
    const auto grads = model::backward_stack(layers, trace, loss.grad, true);
    Probe probe([&] { return loss_and_grad(kind, model::forward_stack(layers, x).output, target).loss; });
    check_stack(probe, layers, grads);
    probe.check(x.values(), grads.grad_input.values());
    return probe.worst();
}

double transfer_case(Rng& rng) {
    const std::size_t n = 3 + rng.index(3), in = 3 + rng.index(3);
    auto spec = model::make_encoder_spec(in, {5, 4}, 2, model::Variant::dsec);
    spec.init = WeightInit::he_uniform;
    auto encoder = model::make_autoencoder(spec, rng).encoder.layers;
    for (auto& l : encoder)
        for (double& b : l.bias) b = 0.1 * rng.normal();
    DenseLayer head = make_dense(2, 2, Activation::softmax, rng, WeightInit::he_uniform);
    const Matrix x = random_matrix(n, in, rng);
    nudge_relu_kinks(encoder, x, kKinkMargin);
    const Matrix target = random_one_hot(n, 2, rng);
    auto total_loss = [&] {
        const auto trace = model::forward_stack(encoder, x);
        return softmax_cross_entropy(dense_forward(head, trace.output).cache, target).loss;
    };
    const auto trace = model::forward_stack(encoder, x);
    const auto head_fwd = dense_forward(head, trace.output);
    const auto loss = softmax_cross_entropy(head_fwd.cache, target);
    const auto head_grads = affine_backward(head, loss.grad, trace.output);
    const auto grads = model::backward_stack(encoder, trace, head_grads.grad_input);
    Probe probe(total_loss);
    check_stack(probe, encoder, grads);
    probe.check(head.weights.values(), head_grads.grad_weights.values());
    probe.check(head.bias, head_grads.grad_bias);
    return probe.worst();
}

double clustering_stack_case(Rng& rng) {
    const std::size_t n = 4 + rng.index(3), in = 3 + rng.index(3);
    auto spec = model::make_encoder_spec(in, {5, 4}, 2, model::Variant::dec);
    spec.init = WeightInit::he_uniform;
    auto encoder = model::make_autoencoder(spec, rng).encoder.layers;
    for (auto& l : encoder)
        for (double& b : l.bias) b = 0.1 * rng.normal();
    const Matrix x = random_matrix(n, in, rng);
    nudge_relu_kinks(encoder, x, kKinkMargin);
    model::ClusterHead head{random_matrix(2, 2, rng), 1.0};
    const Matrix p = model::target_distribution(model::soft_assign(model::forward_stack(encoder, x).output, head));
    auto total_loss = [&] {
        return loss_and_grad(LossKind::kl_divergence, model::soft_assign(model::forward_stack(encoder, x).output, head), p)
            .loss;
    };
    const auto trace = model::forward_stack(encoder, x);
    const Matrix q = model::soft_assign(trace.output, head);
    const auto loss = loss_and_grad(LossKind::kl_divergence, q, p);
    const auto head_grads = model::soft_assign_backward(trace.output, head, q, loss.grad);
    const auto grads = model::backward_stack(encoder, trace, head_grads.grad_embedding);
    Probe probe(total_loss);
    check_stack(probe, encoder, grads);
    probe.check(head.centroids.values(), head_grads.grad_centroids.values());
    return probe.worst();
}

} // namespace

std::vector<SuiteResult> gradient_suite(std::uint64_t seed, std::size_t instances) {
    using Case = std::function<double(Rng&)>;
    const std::vector<std::pair<std::string, Case>> cases{
        {"linear+mse", [](Rng& r) { return layer_loss_case(Activation::linear, LossKind::mse, r); }},
        {"relu+mse", [](Rng& r) { return layer_loss_case(Activation::relu, LossKind::mse, r); }},
        {"linear+mae", [](Rng& r) { return layer_loss_case(Activation::linear, LossKind::mae, r); }},
        {"relu+mae", [](Rng& r) { return layer_loss_case(Activation::relu, LossKind::mae, r); }},
        {"softmax+mse", [](Rng& r) { return layer_loss_case(Activation::softmax, LossKind::mse, r); }},
        {"softmax+bce", [](Rng& r) { return layer_loss_case(Activation::softmax, LossKind::bce, r); }},
        {"softmax+kl", [](Rng& r) { return layer_loss_case(Activation::softmax, LossKind::kl_divergence, r); }},
        {"linear+softmax_cross_entropy", [](Rng& r) { return softmax_cross_entropy_case(r); }},
        {"student_t+kl", [](Rng& r) { return cluster_head_case(r); }},
        {"dec_autoencoder+mse", [](Rng& r) { return autoencoder_case(model::Variant::dec, LossKind::mse, r); }},
        {"dsec_autoencoder+mae", [](Rng& r) { return autoencoder_case(model::Variant::dsec, LossKind::mae, r); }},
        {"encoder+classifier", [](Rng& r) { return transfer_case(r); }},
        {"encoder+student_t+kl", [](Rng& r) { return clustering_stack_case(r); }},
    };
    std::vector<SuiteResult> results;
    Rng root(seed);
    for (const auto& [name, run] : cases) {
        Stopwatch watch;
        Rng rng = root.derive(name);
        SuiteResult r;
        r.name = "gradient " + name;
        for (std::size_t i = 0; i < instances; ++i) {
            const double err = run(rng);
            r.worst = std::max(r.worst, err);
            if (!(err < kGradTolerance)) ++r.failures;
            ++r.trials;
        }
        r.passed = r.failures == 0;
        r.detail = fmt::format("max relative error {:.2e} over {} instances", r.worst, r.trials);
        r.seconds = watch.seconds();
        results.push_back(std::move(r));
    }
    return results;
}

SuiteResult ward_suite(std::uint64_t seed, std::size_t trials, std::size_t max_n) {
    Stopwatch watch;
    Rng rng = Rng(seed).derive("ward");
    SuiteResult r;
    r.name = "ward vs greedy oracle";
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(max_n - 1);
        const Matrix points = random_matrix(n, 1 + rng.index(3), rng);
        const auto tree = analysis::agglomerative_ward(points);
        const auto oracle = brute_force_ward(points);
        bool same = tree.merges.size() == oracle.size();
        for (std::size_t s = 0; same && s < oracle.size(); ++s) {
            const auto& a = tree.merges[s];
            const auto& b = oracle[s];
            same = a.left == b.left && a.right == b.right && a.new_id == b.new_id && a.size == b.size;
            const double gap = std::abs(a.distance - b.distance);
            r.worst = std::max(r.worst, gap);
            same = same && gap <= 1e-9 * std::max(1.0, b.distance);
        }
        ++r.trials;
        if (!same) ++r.failures;
    }
    r.passed = r.failures == 0;
    r.detail = fmt::format("{} of {} merge sequences differ; max distance gap {:.2e}", r.failures, r.trials, r.worst);
    r.seconds = watch.seconds();
    return r;
}

SuiteResult kmeans_suite(std::uint64_t seed, std::size_t trials, std::size_t max_n, double allowed_miss_fraction) {
    Stopwatch watch;
    Rng rng = Rng(seed).derive("kmeans");
    SuiteResult r;
    r.name = "kmeans vs exhaustive 2-partitions";
    std::size_t misses = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 3 + rng.index(max_n - 2);
        const Matrix points = random_matrix(n, 1 + rng.index(3), rng);
        const auto km = analysis::kmeans(points, 2, rng);
        const double best = optimal_two_means_inertia(points);
        const double gap = (km.inertia - best) / std::max(1.0, best);
        r.worst = std::max(r.worst, gap);
        ++r.trials;
        if (gap <= 1e-9) continue;
        ++misses;
        if (!is_lloyd_fixed_point(points, km.centroids, km.assignment.labels)) ++r.failures;
    }
    r.passed = r.failures == 0 && static_cast<double>(misses) <= allowed_miss_fraction * static_cast<double>(trials);
    r.detail = fmt::format("{} local optima of {} trials ({} not Lloyd fixed points); worst relative gap {:.2e}", misses,
                           r.trials, r.failures, r.worst);
    r.seconds = watch.seconds();
    return r;
}

SuiteResult fisher_suite(std::uint64_t seed, std::size_t tables, std::size_t max_margin) {
    Stopwatch watch;
    Rng rng = Rng(seed).derive("fisher");
    SuiteResult r;
    r.name = "fisher vs enumeration";
    const std::size_t half = max_margin / 2;
    while (r.trials < tables) {
        analysis::ContingencyTable t{rng.index(half + 1), rng.index(half + 1), rng.index(half + 1), rng.index(half + 1)};
        if (t.a + t.b == 0 || t.c + t.d == 0 || t.a + t.c == 0 || t.b + t.d == 0) continue;
        const double gap = std::abs(analysis::fisher_exact(t).p_value - fisher_p_by_enumeration(t));
        r.worst = std::max(r.worst, gap);
        ++r.trials;
        if (!(gap <= 1e-12)) ++r.failures;
    }
    std::size_t symmetric_failures = 0;
    for (std::uint64_t x = 1; x <= 20; ++x) {
        for (std::uint64_t y = 1; y <= 20; ++y) {
            for (const analysis::ContingencyTable t : {analysis::ContingencyTable{x, y, x, y}, analysis::ContingencyTable{x, x, y, y}}) {
                const auto res = analysis::fisher_exact(t);
                if (res.odds_ratio != 1.0 || res.p_value != 1.0) ++symmetric_failures;
            }
        }
    }
    r.failures += symmetric_failures;
    r.passed = r.failures == 0;
    r.detail = fmt::format("max |p - exact| {:.2e} over {} tables; {} symmetric tables off (1, 1)", r.worst, r.trials,
                           symmetric_failures);
    r.seconds = watch.seconds();
    return r;
}

} // namespace dsec::selftest
