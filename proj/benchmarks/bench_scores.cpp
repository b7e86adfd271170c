// Scaling of the score and guidance routines. Run with
//   sparke_benchmarks --benchmark_filter=... --benchmark_repetitions=5
// The BigO column reports the fitted complexity for each family.
#include <benchmark/benchmark.h>

#include "sparke/bench.hpp"
#include "sparke/entropy.hpp"
#include "sparke/guidance.hpp"

namespace {

using namespace sparke;

constexpr std::size_t kDim = 2;

void BM_VendiEigen(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = bench::make_points(n, kDim, 0);
  const auto k = build_kernel_matrix(KernelSpec::gaussian(1.0), pts);
  for (auto _ : state) benchmark::DoNotOptimize(vendi_score(k).value);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VendiEigen)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oNCubed)
    ->Unit(benchmark::kMillisecond);

void BM_RkeFrobenius(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pts = bench::make_points(n, kDim, 0);
  const auto spec = KernelSpec::gaussian(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_frobenius_sq(spec, pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RkeFrobenius)->RangeMultiplier(2)->Range(256, 4096)->Complexity(benchmark::oNSquared)
    ->Unit(benchmark::kMillisecond);

GenerationHistory make_history(std::size_t n, bool conditioned) {
  GenerationHistory h;
  const auto pts = bench::make_points(n, kDim, 1);
  const auto ys = bench::make_points(n, kDim, 2);
  for (std::size_t i = 0; i < n; ++i) h.push(pts[i], conditioned ? ys[i] : Vector::Zero(kDim));
  return h;
}

void BM_IrkeGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto history = make_history(n, false);
  const GuidanceConfig cfg;
  const Vector z = Vector::Constant(kDim, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(irke_gradient(history, z, cfg).value.data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IrkeGradient)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN)
    ->Unit(benchmark::kMicrosecond);

void BM_CondIrkeGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto history = make_history(n, true);
  const GuidanceConfig cfg;
  const Vector z = Vector::Constant(kDim, 0.1);
  const Vector y = Vector::Constant(kDim, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(cond_irke_gradient(history, z, y, cfg).value.data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CondIrkeGradient)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN)
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
