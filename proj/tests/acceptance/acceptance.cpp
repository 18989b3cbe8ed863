// Acceptance run: one PASS/FAIL line per criterion A1..A10. Tolerances and
// time budgets are fixed below; the exit code is nonzero if any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dental/config.hpp"
#include "dental/elasticity.hpp"
#include "dental/error.hpp"
#include "dental/geometry.hpp"
#include "dental/nifti.hpp"
#include "dental/pipeline.hpp"
#include "dental/segmentation.hpp"
#include "dental/service.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
// After Eigen: <resolv.h>, pulled in by httplib, defines a macro named _res.
#include "httplib.h"
#include "json.hpp"

using namespace dental;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kA1Tol = 1e-9;
constexpr double kA1Seconds = 5.0;
constexpr double kA2Tol = 1e-8;
constexpr double kA2Seconds = 5.0;
constexpr double kA3Tol = 1e-8;
constexpr double kA4Tol = 1e-8;
constexpr double kA5NullTol = 1e-9;
constexpr double kA5ReactionTol = 1e-8;
constexpr int kA6Cases = 100;
constexpr double kA6Seconds = 30.0;
constexpr int kA7Cases = 50;
constexpr double kA7VolumeTol = 1e-10;
constexpr double kA9Seconds = 60.0;
constexpr double kA10ToleranceFactor = 10.0;

// Solver tolerance used wherever a criterion compares against an exact
// answer at 1e-8; the default 1e-8 residual would leave no margin.
const CgParams kTight{1e-12, 0};
// With 5 vs 2e5 MPa no double-precision u has a residual much below 1e-11
// (rounding of u on the stiff side times K), so the solver cannot be asked
// for 1e-12 there. The elongation tolerance itself is unchanged.
const CgParams kA3Solver{1e-10, 0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double max_abs(const Mat3& m) {
  double s = 0.0;
  for (double x : m.a) s = std::max(s, std::abs(x));
  return s;
}

Vec3 node_u(const std::vector<double>& u, std::size_t n) { return {u[3 * n], u[3 * n + 1], u[3 * n + 2]}; }

MaterialTable two_materials(double e1, double e2, double nu) {
  MaterialTable t;
  t.by_name["Jaw"] = make_material(e1, nu);
  t.by_name["Tooth"] = make_material(e2, nu);
  return t;
}

// ---------------------------------------------------------------------------

Outcome a1_patch_test() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> small(-1e-3, 1e-3);
  const TetMesh mesh = voxels_to_tets(fixtures::box_labels({4, 4, 4}, 1.0));
  const MaterialTable mats = fixtures::uniform_materials(1000.0, 0.3);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Mat3 A;
    for (auto& x : A.a) x = small(rng);
    const Vec3 b{small(rng), small(rng), small(rng)};
    std::set<std::int32_t> boundary;
    for (const auto& f : mesh.boundary) boundary.insert(f.nodes.begin(), f.nodes.end());
    std::vector<std::int64_t> dofs;
    std::vector<double> values;
    for (auto n : boundary) {
      const Vec3 g = A * mesh.nodes[static_cast<std::size_t>(n)] + b;
      for (int c = 0; c < 3; ++c) {
        dofs.push_back(3 * static_cast<std::int64_t>(n) + c);
        values.push_back(g[c]);
      }
    }
    SparseSystem s = assemble(mesh, mats);
    apply_dirichlet(s, dofs, values);
    const CgResult r = solve_cg(s.matrix, s.rhs, {1e-14, 0});
    const std::vector<Mat3> strain = compute_strain(mesh, r.x);
    const Mat3 sym = 0.5 * (A + A.transposed());
    for (const auto& e : strain) worst = std::max(worst, max_abs(e - sym) / max_abs(sym));
  }
  const double t = seconds_since(t0);
  return {worst <= kA1Tol && t < kA1Seconds, "4x4x4 cube, 5 random fields: max rel strain error " + fmt(worst) +
                                                  " (tol " + fmt(kA1Tol) + "), " + fmt(t) + " s (budget " +
                                                  fmt(kA1Seconds) + " s)"};
}

Outcome a2_uniaxial_bar() {
  const auto t0 = std::chrono::steady_clock::now();
  const double E = 2500.0, t = 7.0, L = 10.0;
  double worst = 0.0;
  // 1 x 1 x 10 mm at two resolutions.
  for (const double h : {1.0, 0.5}) {
    const auto n = static_cast<std::int64_t>(std::lround(1.0 / h));
    const TetMesh mesh = fixtures::bar_mesh({n, n, 10 * n}, h);
    const StaticResult r = solve_static(mesh, fixtures::uniform_materials(E, 0.0), fixtures::pressure(t), kTight);
    const double expect = t * L / E;
    double ztop = -1e300;
    for (const auto& p : mesh.nodes) ztop = std::max(ztop, p.z);
    for (std::size_t k = 0; k < mesh.node_count(); ++k) {
      if (mesh.nodes[k].z != ztop) continue;
      const Vec3 u = node_u(r.solution.displacement, k);
      // Compressive pressure shortens the bar.
      worst = std::max(worst, std::abs(-u.z - expect) / expect);
      worst = std::max(worst, std::max(std::abs(u.x), std::abs(u.y)) / expect);
    }
  }
  const double s = seconds_since(t0);
  return {worst <= kA2Tol && s < kA2Seconds, "tip |u_z| vs tL/E: max rel error " + fmt(worst) + " (tol " +
                                                 fmt(kA2Tol) + "), " + fmt(s) + " s (budget " + fmt(kA2Seconds) + " s)"};
}

Outcome a3_series_bar() {
  const double t = 3.0;
  double worst = 0.0;
  for (const auto& [e1, e2] : std::vector<std::pair<double, double>>{{1000.0, 50.0}, {13700.0, 137.0}, {5.0, 2e5}}) {
    for (const std::int64_t split : {3, 5, 8}) {
      const TetMesh mesh = fixtures::series_bar_mesh({1, 1, 10}, 1.0, split);
      const StaticResult r = solve_static(mesh, two_materials(e1, e2, 0.0), fixtures::pressure(t), kA3Solver);
      const double L1 = static_cast<double>(split), L2 = 10.0 - L1;
      const double expect = t * (L1 / e1 + L2 / e2);
      double ztop = -1e300;
      for (const auto& p : mesh.nodes) ztop = std::max(ztop, p.z);
      for (std::size_t k = 0; k < mesh.node_count(); ++k) {
        if (mesh.nodes[k].z == ztop) worst = std::max(worst, std::abs(-r.solution.displacement[3 * k + 2] - expect) / expect);
      }
    }
  }
  return {worst <= kA3Tol, "9 (E1, E2, split) cases: max rel elongation error " + fmt(worst) + " (tol " + fmt(kA3Tol) + ")"};
}

// Small meshes (<= 300 dofs) with mixed materials and both load modes.
struct Fixture {
  std::string name;
  TetMesh mesh;
  MaterialTable materials;
  LoadSpec loads;
};

std::vector<Fixture> small_fixtures() {
  std::vector<Fixture> out;
  out.push_back({"bar 1x1x10", fixtures::bar_mesh({1, 1, 10}, 1.0), fixtures::uniform_materials(1000, 0.3),
                 fixtures::pressure(5)});
  out.push_back({"series bar", fixtures::series_bar_mesh({1, 1, 10}, 1.0, 4), two_materials(13700, 137, 0.45),
                 fixtures::pressure(100)});
  std::mt19937_64 rng(303);
  const std::uint32_t classes[] = {labels::kJaw, labels::tooth(14), labels::pdl(14)};
  for (const Index3 dims : {Index3{2, 2, 5}, Index3{3, 3, 3}, Index3{4, 3, 2}, Index3{6, 2, 2}}) {
    LabelVolume v = make_label_volume(fixtures::grid(dims, 0.5));
    for (auto& l : v.data) l = classes[rng() % 3];
    for (auto l : classes) v.label_names[l] = labels::name(l);
    Fixture f;
    f.name = "mixed " + std::to_string(dims.i) + "x" + std::to_string(dims.j) + "x" + std::to_string(dims.k);
    f.mesh = tag_box_faces(voxels_to_tets(v), {BoxFace::z_lo}, {BoxFace::z_hi, BoxFace::x_hi}).mesh;
    f.materials = fixtures::dental_materials(13700, 137, 0.45);
    f.loads.patches[1] = {TractionMode::normal_pressure, 100.0, {}};
    f.loads.patches[2] = {TractionMode::fixed_vector, 40.0, {0.3, -1.0, 0.5}};
    out.push_back(std::move(f));
  }
  return out;
}

Outcome a4_solver_equivalence() {
  double worst = 0.0;
  std::size_t count = 0, max_dofs = 0;
  for (const auto& f : small_fixtures()) {
    const std::size_t dofs = 3 * f.mesh.node_count();
    if (dofs > 300) continue;
    ++count;
    max_dofs = std::max(max_dofs, dofs);
    const StaticResult r = solve_static(f.mesh, f.materials, f.loads, kTight);
    const Eigen::MatrixXd K = oracles::dense_stiffness(f.mesh, f.materials);
    const std::vector<double> load = assemble_load(f.mesh, f.loads);
    const Eigen::VectorXd ref =
        oracles::dense_solve(K, Eigen::Map<const Eigen::VectorXd>(load.data(), static_cast<Eigen::Index>(load.size())),
                             fixed_dofs(f.mesh));
    const Eigen::Map<const Eigen::VectorXd> u(r.solution.displacement.data(), static_cast<Eigen::Index>(dofs));
    worst = std::max(worst, (u - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
  }
  return {count >= 6 && worst <= kA4Tol, std::to_string(count) + " fixtures (<= " + std::to_string(max_dofs) +
                                             " dofs): max |du|inf/|u|inf " + fmt(worst) + " (tol " + fmt(kA4Tol) + ")"};
}

Outcome a5_nullspace_equilibrium() {
  double worst_null = 0.0, worst_reaction = 0.0;
  auto fx = small_fixtures();
  const fixtures::Phantom p = fixtures::tooth_in_bone({10, 10, 10}, 0.5, 2.0, 6, 2, 0.5);
  fx.push_back({"tooth phantom", tag_boundary(voxels_to_tets(p.labels), p.faces, p.layout, p.spec).mesh,
                fixtures::dental_materials(), fixtures::pressure(100)});
  for (const auto& f : fx) {
    const SparseSystem s = assemble(f.mesh, f.materials);
    const double knorm = s.matrix.norm_inf();
    for (const auto& mode : oracles::rigid_modes(f.mesh)) {
      const std::vector<double> r(mode.data(), mode.data() + mode.size());
      worst_null = std::max(worst_null, norm_inf(s.matrix.multiply(r)) / knorm);
    }
    const StaticResult r = solve_static(f.mesh, f.materials, f.loads, kTight);
    const Vec3 sum = r.total_reaction + r.loads.total_force;
    worst_reaction = std::max(worst_reaction, norm(sum) / norm(r.loads.total_force));
  }
  return {worst_null <= kA5NullTol && worst_reaction <= kA5ReactionTol,
          std::to_string(fx.size()) + " meshes: max |K r|inf/|K|inf " + fmt(worst_null) + " (tol " + fmt(kA5NullTol) +
              "), max |R + F|/|F| " + fmt(worst_reaction) + " (tol " + fmt(kA5ReactionTol) + ")"};
}

Outcome a6_watershed_oracle() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  int identical = 0;
  double impl_seconds = 0.0, oracle_seconds = 0.0;
  for (int trial = 0; trial < kA6Cases; ++trial) {
    const Index3 dims{16, 16, 16};
    const bool quantized = trial % 2 == 0;
    ScalarVolume surface = fixtures::random_volume(rng, dims, 0, quantized ? 6 : 1000,
                                                   quantized ? VoxelType::int16 : VoxelType::float32);
    LabelVolume mask = fixtures::random_labels(rng, dims, 0.55 + 0.4 * coin(rng), 1);
    surface.grid = mask.grid;
    std::vector<std::int64_t> fg;
    for (std::int64_t n = 0; n < mask.grid.count(); ++n)
      if (mask.data[static_cast<std::size_t>(n)]) fg.push_back(n);
    std::shuffle(fg.begin(), fg.end(), rng);
    MarkerSet markers;
    const int count = 2 + static_cast<int>(rng() % 3);
    for (int m = 0; m < count; ++m) {
      const auto id = static_cast<std::uint32_t>(m + 1);
      markers.markers.push_back({mask.grid.unravel(fg[static_cast<std::size_t>(m)]), id});
      markers.roles[id] = m == 0 ? MarkerRole::internal : (m == 1 ? MarkerRole::external : MarkerRole(rng() % 2));
    }
    const Connectivity conn = trial % 4 < 2 ? Connectivity::six : Connectivity::twenty_six;
    auto t0 = std::chrono::steady_clock::now();
    const LabelVolume got = watershed_markers(surface, mask, markers, conn);
    impl_seconds += seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const LabelVolume want = oracles::meyer_flood(surface, mask, markers, conn);
    oracle_seconds += seconds_since(t0);
    identical += got.data == want.data;
  }
  return {identical == kA6Cases && impl_seconds < kA6Seconds,
          std::to_string(identical) + "/" + std::to_string(kA6Cases) + " 16^3 volumes identical to the oracle; " +
              fmt(impl_seconds) + " s (budget " + fmt(kA6Seconds) + " s), oracle " + fmt(oracle_seconds) + " s"};
}

Outcome a7_mesh_audit() {
  std::mt19937_64 rng(707);
  int good = 0;
  double worst_volume = 0.0;
  for (int trial = 0; trial < kA7Cases; ++trial) {
    LabelVolume v = fixtures::random_labels(rng, {6, 6, 6}, 0.3 + 0.014 * trial, 3);
    v.grid.spacing = {0.5, 0.75, 0.4};
    const TetMesh m = voxels_to_tets(v);
    const auto incidence = oracles::facet_incidence(m);
    bool ok = true;
    std::set<std::array<std::int32_t, 3>> once;
    for (const auto& [facet, n] : incidence) {
      if (n == 1) once.insert(facet);
      ok = ok && (n == 1 || n == 2);
    }
    std::set<std::array<std::int32_t, 3>> listed;
    for (const auto& f : m.boundary) {
      auto key = f.nodes;
      std::sort(key.begin(), key.end());
      listed.insert(key);
    }
    ok = ok && listed == once && listed.size() == m.boundary.size();
    double total = 0.0;
    for (std::size_t t = 0; t < m.tet_count(); ++t) {
      const double vol = tet_volume(m, t);
      ok = ok && vol > 0.0;
      total += vol;
    }
    const auto filled = static_cast<double>(std::count_if(v.data.begin(), v.data.end(), [](auto l) { return l != 0; }));
    const double expect = filled * v.grid.voxel_volume();
    const double err = std::abs(total - expect) / expect;
    worst_volume = std::max(worst_volume, err);
    ok = ok && err <= kA7VolumeTol;
    good += ok;
  }
  return {good == kA7Cases, std::to_string(good) + "/" + std::to_string(kA7Cases) +
                                " random 6^3 meshes: incidence in {1, 2}, boundary list = incidence-1 facets, all "
                                "volumes > 0; max volume error " + fmt(worst_volume) + " (tol " + fmt(kA7VolumeTol) + ")"};
}

// Little-endian payload of `values` stored as T, written independently of
// the library's encoder.
template <class T>
std::vector<std::uint8_t> payload_of(const std::vector<double>& values) {
  std::vector<std::uint8_t> out(values.size() * sizeof(T));
  for (std::size_t n = 0; n < values.size(); ++n) {
    const T v = static_cast<T>(values[n]);
    std::memcpy(out.data() + n * sizeof(T), &v, sizeof(T));
  }
  return out;
}

bool payload_matches(const Bytes& file, const std::vector<std::uint8_t>& expect) {
  float vox_offset = 0.0f;
  std::memcpy(&vox_offset, file.data() + 108, 4);
  const auto off = static_cast<std::size_t>(vox_offset);
  return file.size() == off + expect.size() && std::equal(expect.begin(), expect.end(), file.begin() + static_cast<std::ptrdiff_t>(off));
}

Outcome a8_nifti_round_trip() {
  std::mt19937_64 rng(808);
  std::vector<std::string> failed;
  const Index3 dims{7, 5, 4};
  auto scalar = [&](const char* name, VoxelType type, double lo, double hi, auto tag) {
    using T = decltype(tag);
    const ScalarVolume v = fixtures::random_volume(rng, dims, lo, hi, type);
    const Bytes bytes = write_nifti(v);
    const ScalarVolume back = read_nifti(bytes);
    const bool ok = back.data == v.data && back.storage == type && payload_matches(bytes, payload_of<T>(v.data)) &&
                    write_nifti(back) == bytes;
    if (!ok) failed.push_back(name);
  };
  scalar("int8", VoxelType::int8, -128, 127, std::int8_t{});
  scalar("int16", VoxelType::int16, -32768, 32767, std::int16_t{});
  scalar("int32", VoxelType::int32, -2147483648.0, 2147483647.0, std::int32_t{});
  scalar("float32", VoxelType::float32, -1e6, 1e6, float{});

  auto label = [&](const char* name, std::vector<std::uint32_t> pool, auto tag) {
    using T = decltype(tag);
    LabelVolume v = make_label_volume(fixtures::grid(dims, 0.5));
    for (auto& l : v.data) l = pool[rng() % pool.size()];
    for (auto l : pool)
      if (l) v.label_names[l] = labels::name(l);
    const Bytes bytes = write_nifti(v);
    const LabelVolume back = read_label_nifti(bytes);
    std::vector<double> as_double(v.data.begin(), v.data.end());
    std::string why;
    if (back.data != v.data) why += " data";
    if (back.label_names != v.label_names) why += " names";
    if (!payload_matches(bytes, payload_of<T>(as_double))) why += " payload";
    if (write_nifti(back) != bytes) why += " rewrite";
    if (!why.empty()) failed.push_back(name + std::string(" (") + why.substr(1) + ")");
  };
  label("labels uint8", {0, labels::kJaw, labels::kDentition, labels::tooth(14), labels::pdl(16)}, std::uint8_t{});
  // A foreign label above 255 forces the wider type.
  label("labels int16", {0, labels::kJaw, labels::tooth(21), labels::pdl(48), labels::prosthesis(55), 4000}, std::int16_t{});
  std::string detail = "int8, int16, int32, float32 and uint8/int16 label volumes";
  if (failed.empty()) return {true, detail + ": payloads bit-identical, re-write byte-equal"};
  for (const auto& f : failed) detail += "; mismatch: " + f;
  return {false, detail};
}

Outcome a9_dental_phantom() {
  const auto t0 = std::chrono::steady_clock::now();
  const double e_bone = 13700.0, e_pdl = 137.0;  // two orders apart
  const fixtures::Phantom p = fixtures::tooth_in_bone({22, 22, 24}, 0.5, 5.0, 15, 4, 0.5);
  const TagResult tagged = tag_boundary(voxels_to_tets(p.labels), p.faces, p.layout, p.spec);
  const TetMesh& mesh = tagged.mesh;
  const LoadSpec load = fixtures::pressure(100.0);

  const StaticResult full = solve_static(mesh, fixtures::dental_materials(e_bone, e_pdl), load);
  const StaticResult half = solve_static(mesh, fixtures::dental_materials(e_bone, 0.5 * e_pdl), load);

  // Bone tets sharing a facet with a PDL tet.
  const auto pdl = labels::pdl(11), tooth = labels::tooth(11);
  std::map<std::array<std::int32_t, 3>, std::vector<std::size_t>> owners;
  static constexpr int kFaces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    for (const auto& f : kFaces) {
      std::array<std::int32_t, 3> key{mesh.tets[t][f[0]], mesh.tets[t][f[1]], mesh.tets[t][f[2]]};
      std::sort(key.begin(), key.end());
      owners[key].push_back(t);
    }
  }
  double vm_pdl = 0.0, vm_bone_adj = 0.0;
  std::size_t adjacent = 0;
  std::vector<std::uint8_t> is_adj(mesh.tet_count(), 0);
  for (const auto& [_, ts] : owners) {
    if (ts.size() != 2) continue;
    const auto la = mesh.tet_labels[ts[0]], lb = mesh.tet_labels[ts[1]];
    if (la == pdl && lb == labels::kJaw) is_adj[ts[1]] = 1;
    if (lb == pdl && la == labels::kJaw) is_adj[ts[0]] = 1;
  }
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    if (mesh.tet_labels[t] == pdl) vm_pdl = std::max(vm_pdl, full.solution.von_mises[t]);
    if (is_adj[t]) {
      ++adjacent;
      vm_bone_adj = std::max(vm_bone_adj, full.solution.von_mises[t]);
    }
  }
  auto tooth_umax = [&](const StaticResult& r) {
    double u = 0.0;
    for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
      if (mesh.tet_labels[t] != tooth) continue;
      for (auto n : mesh.tets[t]) u = std::max(u, norm(node_u(r.solution.displacement, static_cast<std::size_t>(n))));
    }
    return u;
  };
  const double u_full = tooth_umax(full), u_half = tooth_umax(half);
  const double s = seconds_since(t0);
  const bool i = vm_pdl >= vm_bone_adj && adjacent > 0;
  const bool ii = u_half >= u_full;
  return {i && ii && s < kA9Seconds,
          std::to_string(mesh.tet_count()) + " tets; (i) " + (i ? "ok" : "violated") + ": max vM PDL " + fmt(vm_pdl) +
              " MPa vs adjacent bone " + fmt(vm_bone_adj) + " MPa (" + std::to_string(adjacent) + " tets); (ii) " +
              (ii ? "ok" : "violated") + ": max |u| tooth " + fmt(u_full) + " -> " + fmt(u_half) +
              " mm with E_pdl halved; " + fmt(s) + " s (budget " + fmt(kA9Seconds) + " s)"};
}

// --- A10 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome a10_cli_service() {
  const fs::path dir = fs::temp_directory_path() / "dental_acceptance_a10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto ct = fixtures::two_tooth_ct();
  const Bytes volume = write_nifti(ct.volume);
  write_file(dir / "ct.nii", volume);
  SegmentationParams params;
  params.threshold = ct.threshold;
  ProsthesisSpec spec;
  spec.supporting_teeth = {14, 16};
  spec.pontic_teeth = {15};
  spec.teeth[14] = {1, 0.5};
  spec.teeth[16] = {2, 0.5};
  const CgParams solver{};  // default tolerance, as a user would run it
  const std::string materials = to_json(fixtures::dental_materials());
  const std::string loads = to_json(fixtures::pressure(100));
  const json cfg = {{"input", "ct.nii"},
                    {"out_dir", "cli"},
                    {"segmentation", json::parse(to_json(params))},
                    {"markers", json::parse(to_json(ct.markers))},
                    {"cuts", json::parse(to_json(CutSet{ct.cuts, ct.seeds}))},
                    {"prosthesis", json::parse(to_json(spec))},
                    {"materials", json::parse(materials)},
                    {"loads", json::parse(loads)},
                    {"solver", json::parse(to_json(solver))}};
  std::ofstream(dir / "config.json") << cfg.dump(2);
  for (const char* stage : {"segment", "mesh", "solve"}) {
    const std::string cmd = std::string(DENTFEM_PATH) + " " + stage + " --config " + (dir / "config.json").string() +
                            " > " + (dir / (std::string(stage) + ".log")).string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, std::string("dentfem ") + stage + " failed: " + slurp(dir / (std::string(stage) + ".log"))};
  }

  CaseService service(ServiceConfig{dir / "service", 1});
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  std::thread th([&] { server.run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(600, 0);
  std::string problem;
  auto expect_ok = [&](const httplib::Result& r, const std::string& what) {
    if (!r || r->status >= 300) {
      if (problem.empty()) problem = what + ": " + (r ? r->body : std::string("no response"));
      return false;
    }
    return true;
  };
  auto wait_job = [&](const httplib::Result& r, const std::string& what) {
    if (!expect_ok(r, what)) return;
    const std::string id = json::parse(r->body)["id"];
    for (;;) {
      auto j = client.Get("/jobs/" + id);
      if (!expect_ok(j, what)) return;
      const json job = json::parse(j->body);
      if (job["state"] == "done") return;
      if (job["state"] == "failed") {
        if (problem.empty()) problem = what + ": " + job["error"].dump();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  };
  std::string labels_http, solution_http;
  {
    auto c = client.Post("/cases", R"({"name": "A10"})", "application/json");
    if (expect_ok(c, "create case")) {
      const std::string base = "/cases/" + json::parse(c->body)["id"].get<std::string>();
      expect_ok(client.Post(base + "/volume", std::string(volume.begin(), volume.end()), "application/octet-stream"), "volume");
      expect_ok(client.Put(base + "/segmentation/params", to_json(params), "application/json"), "params");
      expect_ok(client.Put(base + "/segmentation/markers", to_json(ct.markers), "application/json"), "markers");
      expect_ok(client.Put(base + "/segmentation/cuts", to_json(CutSet{ct.cuts, ct.seeds}), "application/json"), "cuts");
      expect_ok(client.Put(base + "/materials", materials, "application/json"), "materials");
      expect_ok(client.Put(base + "/loads", loads, "application/json"), "loads");
      expect_ok(client.Put(base + "/solver", to_json(solver), "application/json"), "solver");
      expect_ok(client.Put(base + "/variants/v1", json{{"prosthesis", json::parse(to_json(spec))}}.dump(), "application/json"),
                "variant");
      wait_job(client.Post(base + "/run/segment", "", "text/plain"), "segment");
      wait_job(client.Post(base + "/run/mesh?variant=v1", "", "text/plain"), "mesh");
      wait_job(client.Post(base + "/run/solve?variant=v1", "", "text/plain"), "solve");
      auto l = client.Get(base + "/segmentation/labels");
      if (expect_ok(l, "labels")) labels_http = l->body;
      auto s = client.Get(base + "/variants/v1/solution");
      if (expect_ok(s, "solution")) solution_http = s->body;
    }
  }
  server.stop();
  th.join();
  if (!problem.empty()) return {false, "service run failed at " + problem};

  const std::string labels_cli = slurp(dir / "cli" / "labels.nii");
  const bool labels_same = !labels_cli.empty() && labels_cli == labels_http;
  const Solution a = deserialize_solution(read_file(dir / "cli" / "solution.bin"));
  const Solution b = deserialize_solution(std::span(reinterpret_cast<const std::uint8_t*>(solution_http.data()), solution_http.size()));
  double du = 0.0, umax = 0.0;
  if (a.displacement.size() != b.displacement.size()) return {false, "solution sizes differ"};
  for (std::size_t n = 0; n < a.displacement.size(); ++n) {
    du = std::max(du, std::abs(a.displacement[n] - b.displacement[n]));
    umax = std::max(umax, std::abs(a.displacement[n]));
  }
  const double rel = du / umax;
  const double tol = kA10ToleranceFactor * solver.rel_tol;
  fs::remove_all(dir);
  return {labels_same && rel <= tol, std::string("labels ") + (labels_same ? "bit-identical" : "DIFFER") +
                                         "; solution max |du|/|u| " + fmt(rel) + " (tol " + fmt(tol) + ")"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {"A1", "patch test", a1_patch_test},
      {"A2", "uniaxial bar", a2_uniaxial_bar},
      {"A3", "bi-material series bar", a3_series_bar},
      {"A4", "solver equivalence", a4_solver_equivalence},
      {"A5", "rigid-body nullspace and equilibrium", a5_nullspace_equilibrium},
      {"A6", "watershed oracle", a6_watershed_oracle},
      {"A7", "mesh audit", a7_mesh_audit},
      {"A8", "NIfTI round-trip", a8_nifti_round_trip},
      {"A9", "dental phantom properties", a9_dental_phantom},
      {"A10", "CLI/service equivalence", a10_cli_service},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (all.size() - static_cast<std::size_t>(failed)) << "/" << all.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
