#include <random>

#include <benchmark/benchmark.h>

#include "dental/mesh.hpp"
#include "dental/nifti.hpp"
#include "dental/geometry.hpp"

using namespace dental;

namespace {

ScalarVolume ct(std::int64_t n) {
  ScalarVolume v = make_scalar_volume(Grid{{n, n, n}, {0.3, 0.3, 0.3}, {}});
  v.storage = VoxelType::int16;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> d(-1000, 3000);
  for (auto& x : v.data) x = d(rng);
  return v;
}

void BM_NiftiWrite(benchmark::State& state) {
  const ScalarVolume v = ct(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(write_nifti(v));
  state.SetBytesProcessed(state.iterations() * v.grid.count() * 2);
}
BENCHMARK(BM_NiftiWrite)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_NiftiRead(benchmark::State& state) {
  const Bytes bytes = write_nifti(ct(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(read_nifti(bytes));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_NiftiRead)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_VoxelsToTets(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  LabelVolume v = make_label_volume(Grid{{n, n, n}, {0.5, 0.5, 0.5}, {}}, labels::kJaw);
  v.label_names[labels::kJaw] = "Jaw";
  for (auto _ : state) benchmark::DoNotOptimize(voxels_to_tets(v));
  state.SetItemsProcessed(state.iterations() * v.grid.count());
}
BENCHMARK(BM_VoxelsToTets)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ExtractBoundary(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  LabelVolume v = make_label_volume(Grid{{n, n, n}, {0.5, 0.5, 0.5}, {}}, labels::kJaw);
  v.label_names[labels::kJaw] = "Jaw";
  const TetMesh mesh = voxels_to_tets(v);
  for (auto _ : state) benchmark::DoNotOptimize(extract_boundary(mesh));
}
BENCHMARK(BM_ExtractBoundary)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
