#include <benchmark/benchmark.h>

#include "dsbm/estimator.hpp"
#include "dsbm/kernels.hpp"
#include "dsbm/linalg.hpp"
#include "dsbm/model.hpp"
#include "dsbm/rng.hpp"
#include "dsbm/spectral.hpp"

namespace {

using namespace dsbm;

SnapshotSequence block_snapshots(int n, int T, std::uint64_t seed) {
  Matrix B(2, 2);
  B << 0.6, 0.2, 0.2, 0.6;
  const Matrix P = build_probability_matrix(balanced_labels(n, 2), B);
  return sample_adjacency(ProbabilityTensor(static_cast<std::size_t>(T), P), 10.0, seed);
}

void BM_SpectralNormDense(benchmark::State& state) {
  const auto S = block_snapshots(static_cast<int>(state.range(0)), 2, 1);
  const Matrix D = S.A[0] - S.A[1];
  SpectralNormOptions opt;
  opt.method = NormMethod::Dense;
  for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(D, opt));
}
BENCHMARK(BM_SpectralNormDense)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SpectralNormLanczos(benchmark::State& state) {
  const auto S = block_snapshots(static_cast<int>(state.range(0)), 2, 1);
  const Matrix D = S.A[0] - S.A[1];
  SpectralNormOptions opt;
  opt.method = NormMethod::Lanczos;
  for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(D, opt));
}
BENCHMARK(BM_SpectralNormLanczos)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_BuildKernelExact(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_kernel(WindowType::LeftBoundary, r, 2).weights.data());
}
BENCHMARK(BM_BuildKernelExact)->Arg(4)->Arg(16)->Arg(32);

void BM_BuildKernelFloating(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_kernel(WindowType::LeftBoundary, 64, 2).weights.data());
}
BENCHMARK(BM_BuildKernelFloating);

void BM_LepskiiSelect(benchmark::State& state) {
  const auto S = block_snapshots(static_cast<int>(state.range(0)), 50, 2);
  KernelBank bank;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lepskii_select(S, 25, 1, 1.0, EmpiricalMode{0.2}, {}, &bank).trace.r_hat);
  }
}
BENCHMARK(BM_LepskiiSelect)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  Matrix rows(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) rows(i, j) = uniform01(rng) + (i % 3 == j ? 2.0 : 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_approx(rows, 3, 0.1, 20, 7).objective);
}
BENCHMARK(BM_KMeans)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ClusterSnapshot(benchmark::State& state) {
  const auto S = block_snapshots(static_cast<int>(state.range(0)), 1, 4);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_matrix(S.A[0], 2, {}, 5).objective);
}
BENCHMARK(BM_ClusterSnapshot)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
