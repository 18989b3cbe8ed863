#include <random>

#include <benchmark/benchmark.h>

#include "dental/segmentation.hpp"

using namespace dental;

namespace {

// Smooth random bumps so the flood has real basins to fill.
ScalarVolume surface(std::int64_t n) {
  ScalarVolume v = make_scalar_volume(Grid{{n, n, n}, {0.5, 0.5, 0.5}, {}});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  const double a = d(rng) * 6.0, b = d(rng) * 6.0;
  for (std::int64_t k = 0; k < v.grid.count(); ++k) {
    const Index3 q = v.grid.unravel(k);
    v.data[static_cast<std::size_t>(k)] = std::sin(0.3 * q.i + a) * std::cos(0.25 * q.j + b) + 0.1 * q.k + 0.05 * d(rng);
  }
  return v;
}

MarkerSet markers(std::int64_t n) {
  MarkerSet m;
  m.markers = {{{n / 4, n / 4, n / 4}, 1}, {{3 * n / 4, 3 * n / 4, n / 2}, 2}, {{n / 2, 1, 3 * n / 4}, 3}};
  m.roles = {{1, MarkerRole::internal}, {2, MarkerRole::internal}, {3, MarkerRole::external}};
  return m;
}

void BM_Watershed(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const ScalarVolume s = surface(n);
  LabelVolume mask = make_label_volume(s.grid, 1);
  mask.label_names[1] = "Label_1";
  const MarkerSet m = markers(n);
  const auto conn = state.range(1) ? Connectivity::twenty_six : Connectivity::six;
  for (auto _ : state) benchmark::DoNotOptimize(watershed_markers(s, mask, m, conn));
  state.SetItemsProcessed(state.iterations() * s.grid.count());
}
BENCHMARK(BM_Watershed)->Args({32, 0})->Args({64, 0})->Args({64, 1})->Unit(benchmark::kMillisecond);

void BM_GradientMagnitude(benchmark::State& state) {
  const ScalarVolume s = surface(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gradient_magnitude(s));
  state.SetItemsProcessed(state.iterations() * s.grid.count());
}
BENCHMARK(BM_GradientMagnitude)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ConnectedComponents(benchmark::State& state) {
  const ScalarVolume s = surface(state.range(0));
  const LabelVolume mask = threshold(s, 0.5 * state.range(0) * 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(mask));
  state.SetItemsProcessed(state.iterations() * s.grid.count());
}
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
