#include <benchmark/benchmark.h>

#include <vector>

#include "dsec/analysis/fisher.hpp"
#include "dsec/analysis/kmeans.hpp"
#include "dsec/analysis/linkage.hpp"
#include "dsec/eval/forest.hpp"
#include "dsec/nn/dense.hpp"

using namespace dsec;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

void BM_DenseForwardBackward(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const auto layer = make_dense(13, 64, Activation::relu, rng);
    const auto x = gaussian(batch, 13, 2);
    const auto grad = gaussian(batch, 64, 3);
    for (auto _ : state) {
        const auto fwd = dense_forward(layer, x);
        benchmark::DoNotOptimize(dense_backward(layer, grad, fwd.cache, x));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenseForwardBackward)->Arg(32)->Arg(256);

void BM_KMeans(benchmark::State& state) {
    const auto points = gaussian(static_cast<std::size_t>(state.range(0)), 3, 4);
    for (auto _ : state) {
        Rng rng(5);
        benchmark::DoNotOptimize(analysis::kmeans(points, 2, rng));
    }
}
BENCHMARK(BM_KMeans)->Arg(500)->Arg(2000);

void BM_Ward(benchmark::State& state) {
    const auto points = gaussian(static_cast<std::size_t>(state.range(0)), 3, 6);
    for (auto _ : state) benchmark::DoNotOptimize(analysis::agglomerative_ward(points));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Ward)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_FisherExact(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    const analysis::ContingencyTable table{n / 3, n / 4, n / 5, n - n / 3 - n / 4 - n / 5};
    for (auto _ : state) benchmark::DoNotOptimize(analysis::fisher_exact(table));
}
BENCHMARK(BM_FisherExact)->Arg(50)->Arg(2000);

void BM_ForestTrain(benchmark::State& state) {
    const auto x = gaussian(1500, 3, 7);
    std::vector<int> y(x.rows());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x(i, 0) + 0.5 * x(i, 1) > 0 ? 1 : 0;
    for (auto _ : state) {
        Rng rng(8);
        benchmark::DoNotOptimize(eval::forest_train(x, y, eval::ForestOptions{}, rng));
    }
}
BENCHMARK(BM_ForestTrain)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
