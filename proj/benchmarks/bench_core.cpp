#include <benchmark/benchmark.h>

#include "ipe/ipe.hpp"

namespace {

using namespace ipe;

FeatureMap random_features(std::uint32_t c, std::uint32_t side, std::uint64_t seed) {
    Rng rng(seed);
    FeatureMap f;
    f.channels = c;
    f.height = side;
    f.width = side;
    f.data.resize(std::size_t{c} * side * side);
    for (auto& v : f.data) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    return f;
}

void BM_Affinity(benchmark::State& state) {
    const auto f = random_features(static_cast<std::uint32_t>(state.range(0)), 21, 1);
    for (auto _ : state) benchmark::DoNotOptimize(compute_affinity(f, static_cast<int>(state.range(1))));
}
BENCHMARK(BM_Affinity)->Args({256, 1})->Args({2048, 1})->Args({2048, 4})->Unit(benchmark::kMillisecond);

void BM_LaplacianSpectrum(benchmark::State& state) {
    const auto w = build_similarity(compute_affinity(random_features(64, 21, 2)));
    for (auto _ : state) benchmark::DoNotOptimize(laplacian_spectrum(w));
}
BENCHMARK(BM_LaplacianSpectrum)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    const auto spectrum = laplacian_spectrum(build_similarity(compute_affinity(random_features(64, 21, 3))));
    const int k = static_cast<int>(state.range(0));
    const auto points = embed(spectrum, k);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, k, SpectralConfig{}));
}
BENCHMARK(BM_KMeans)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

void BM_CrfIteration(benchmark::State& state) {
    const auto side = static_cast<std::uint32_t>(state.range(0));
    const auto scene = [&] {
        SyntheticSceneSpec spec;
        spec.image_size = side;
        return make_disc_scene(4, spec);
    }();
    std::vector<int> labels(scene.image.pixel_count());
    for (std::size_t p = 0; p < labels.size(); ++p) labels[p] = scene.disc.pixels[p];
    const auto unary = labels_to_unary(labels, side, side, 3, 0.1);
    CrfParams p;
    p.iterations = 1;
    p.workers = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(mean_field_refine(scene.image, unary, p));
}
BENCHMARK(BM_CrfIteration)->Args({64, 1})->Args({672, 1})->Args({672, 4})->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
    const auto scene = make_disc_scene(5);
    const PgmConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(run_pgm(scene.image, scene.features, cfg, "bench"));
}
BENCHMARK(BM_Pipeline)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
