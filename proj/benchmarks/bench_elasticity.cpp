#include <benchmark/benchmark.h>

#include "dental/elasticity.hpp"
#include "dental/geometry.hpp"

using namespace dental;

namespace {

struct Model {
  TetMesh mesh;
  MaterialTable materials;
  LoadSpec loads;
};

// Cylindrical tooth in a bone block, PDL grown around the root; n voxels a side.
Model phantom(std::int64_t n) {
  LabelVolume v = make_label_volume(Grid{{n, n, n + 2}, {0.5, 0.5, 0.5}, {}});
  const double c = 0.5 * static_cast<double>(n - 1), r = 0.22 * static_cast<double>(n);
  const auto tooth = labels::tooth(11);
  for (std::int64_t k = 0; k < v.grid.count(); ++k) {
    const Index3 q = v.grid.unravel(k);
    const double di = q.i - c, dj = q.j - c;
    auto& l = v.data[static_cast<std::size_t>(k)];
    if (di * di + dj * dj <= r * r && q.k >= n / 5) l = tooth;
    else if (q.k < 2 * n / 3) l = labels::kJaw;
  }
  v.label_names = {{labels::kJaw, "Jaw"}, {tooth, labels::name(tooth)}};
  ProsthesisSpec spec;
  spec.supporting_teeth = {11};
  spec.teeth[11] = ToothSettings{0, 0.5};
  const LabelVolume with_pdl = generate_pdl(v, {{11, 0.5}});
  const TagResult tagged =
      tag_boundary(voxels_to_tets(with_pdl), faces_touching(with_pdl, labels::kJaw), layout_bridge(with_pdl, spec), spec);

  Model m{tagged.mesh, {}, {}};
  m.materials.by_name = {{"Jaw", make_material(13700.0, 0.3)},
                         {"Tooth", make_material(18600.0, 0.31)},
                         {"PDL", make_material(50.0, 0.45)}};
  m.loads.default_traction = Traction{TractionMode::normal_pressure, 100.0, {}};
  return m;
}

void BM_ElementStiffness(benchmark::State& state) {
  const std::array<Vec3, 4> x{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0.1, 1, 0}, Vec3{0.2, 0.3, 1}};
  for (auto _ : state) benchmark::DoNotOptimize(element_stiffness(x, 1000.0, 700.0));
}
BENCHMARK(BM_ElementStiffness);

void BM_Assemble(benchmark::State& state) {
  const Model m = phantom(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(m.mesh, m.materials));
  state.counters["tets"] = static_cast<double>(m.mesh.tet_count());
}
BENCHMARK(BM_Assemble)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_SolveCg(benchmark::State& state) {
  const Model m = phantom(state.range(0));
  SparseSystem sys = assemble(m.mesh, m.materials);
  sys.rhs = assemble_load(m.mesh, m.loads);
  apply_dirichlet(sys, fixed_dofs(m.mesh));
  std::int64_t iterations = 0;
  for (auto _ : state) {
    const CgResult r = solve_cg(sys.matrix, sys.rhs);
    iterations = r.report.iterations;
    benchmark::DoNotOptimize(r.x.data());
  }
  state.counters["dofs"] = static_cast<double>(sys.matrix.rows);
  state.counters["cg_iterations"] = static_cast<double>(iterations);
}
BENCHMARK(BM_SolveCg)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_SolveStatic(benchmark::State& state) {
  const Model m = phantom(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_static(m.mesh, m.materials, m.loads));
  state.counters["tets"] = static_cast<double>(m.mesh.tet_count());
}
BENCHMARK(BM_SolveStatic)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
