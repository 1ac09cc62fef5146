#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "numcolor/codebook.hpp"
#include "numcolor/corpus.hpp"
#include "numcolor/cta.hpp"
#include "numcolor/kernels.hpp"
#include "numcolor/metrics.hpp"

using namespace numcolor;

namespace {

parallel::Backend backend_of(const benchmark::State& state) {
    return state.range(0) == 0 ? parallel::Backend::serial : parallel::Backend::openmp;
}

const std::vector<LabColor>& anchors() {
    static const auto grid = build_anchor_grid(5.0);
    return grid;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void BM_Knn(benchmark::State& state) {
    const auto& grid = anchors();
    std::vector<double> pts;
    for (const auto& a : grid) pts.insert(pts.end(), {a.L, a.a, a.b});
    const auto qs = random_values(3 * 1024, 1, -60, 90);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::knn(pts, 3, qs, 8, backend_of(state)));
    state.SetItemsProcessed(state.iterations() * 1024);
}

void BM_GamutMask(benchmark::State& state) {
    std::vector<LabColor> labs;
    const auto v = random_values(3 * 100000, 2, -130, 130);
    for (std::size_t i = 0; i < v.size(); i += 3) labs.push_back({(v[i] + 130) / 2.6, v[i + 1], v[i + 2]});
    for (auto _ : state) benchmark::DoNotOptimize(kernels::gamut_mask(labs, backend_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(labs.size()));
}

void BM_RowDrift(benchmark::State& state) {
    const auto e0 = random_values(6574 * 64, 3, -1, 1);
    const auto e1 = random_values(6574 * 64, 4, -1, 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::row_drift(e0, e1, 64, backend_of(state)));
}

void BM_KnnOverlap(benchmark::State& state) {
    const auto a = random_values(2000 * 3, 5, -1, 1);
    const auto b = random_values(2000 * 16, 6, -1, 1);
    const RowMatrix A = Eigen::Map<const RowMatrix>(a.data(), 2000, 3);
    const RowMatrix B = Eigen::Map<const RowMatrix>(b.data(), 2000, 16);
    for (auto _ : state) benchmark::DoNotOptimize(knn_overlap(A, B, 8, backend_of(state)));
}

void BM_BatchGradient(benchmark::State& state) {
    static const auto batch = [] {
        const auto bank = PhraseBank::parse("[objects]\ncar\nvase\n[connectors]\nwith\nin\n");
        return gen_tagger_corpus(20, bank, {Tokenizer::chars()}, 1).train;
    }();
    const auto m = CtaModel::initialized(CtaConfig::toy(), 1);
    std::vector<double> grad(m.parameter_count());
    const DropoutContext ctx{true, 1, 0, 0};
    for (auto _ : state) {
        std::fill(grad.begin(), grad.end(), 0.0);
        benchmark::DoNotOptimize(batch_gradient(m, batch, grad, ctx, backend_of(state)));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}

}  // namespace

// Argument 0 runs the serial reference, 1 the OpenMP kernel.
BENCHMARK(BM_Knn)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GamutMask)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RowDrift)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnOverlap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
