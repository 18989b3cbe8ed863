#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dental/mesh.hpp"
#include "dental/sparse.hpp"

namespace dental {

// Units throughout: mm, MPa, N (1 MPa * 1 mm^2 = 1 N).

struct Lame {
  double lambda = 0.0;
  double mu = 0.0;
};

/// lambda = E nu / ((1 + nu)(1 - 2 nu)), mu = E / (2 (1 + nu)). Rejects
/// nu within 1e-6 of 0.5, where linear tets lock.
Lame lame_from_engineering(double E, double nu);

struct Material {
  double E = 0.0;
  double nu = 0.0;
  double lambda = 0.0;
  double mu = 0.0;

  friend bool operator==(const Material&, const Material&) = default;
};

Material make_material(double E, double nu);

/// Piecewise-constant material assignment. Lookup order for a label:
/// exact name ("PDL_14"), then for PDL the mobility preset of the tooth's
/// mobility degree, then the class name ("PDL", "Tooth", "Jaw",
/// "Prosthesis").
struct MaterialTable {
  std::map<std::string, Material> by_name;
  std::map<int, Material> mobility;    // degree 0..3 -> PDL material
  std::map<int, int> tooth_mobility;   // tooth number -> degree

  const Material& resolve(std::uint32_t label) const;
  friend bool operator==(const MaterialTable&, const MaterialTable&) = default;
};

enum class TractionMode { normal_pressure, fixed_vector };

/// normal_pressure: f = -magnitude * outward normal (compressive when
/// positive). fixed_vector: f = magnitude * direction / |direction|.
struct Traction {
  TractionMode mode = TractionMode::normal_pressure;
  double magnitude = 100.0;
  Vec3 direction{0.0, 0.0, -1.0};

  friend bool operator==(const Traction&, const Traction&) = default;
};

struct LoadSpec {
  /// Applied to every patch without an explicit entry; unset means such
  /// patches carry no load.
  std::optional<Traction> default_traction = Traction{};
  std::map<std::int32_t, Traction> patches;

  friend bool operator==(const LoadSpec&, const LoadSpec&) = default;
};

using ElementMatrix = std::array<double, 144>;

struct ShapeGradients {
  std::array<Vec3, 4> grad;
  double volume = 0.0;
};

/// Gradients of the four linear basis functions. Throws Errc::element for
/// degenerate or inverted tets.
ShapeGradients shape_gradients(const std::array<Vec3, 4>& x);

/// 12x12 row-major stiffness of one linear tet, dof order (node, component).
ElementMatrix element_stiffness(const std::array<Vec3, 4>& x, double lambda, double mu);

struct SparseSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
  std::vector<std::uint8_t> constrained;  // per dof
  std::vector<double> prescribed;         // per dof, meaningful where constrained

  std::size_t dofs() const { return rhs.size(); }
};

/// Global stiffness (3 dofs per node); rhs zero, nothing constrained.
SparseSystem assemble(const TetMesh& mesh, const MaterialTable& materials);

struct LoadSummary {
  std::map<std::int32_t, double> patch_area;  // mm^2
  std::map<std::int32_t, Vec3> patch_force;   // N
  Vec3 total_force;
};

/// Consistent nodal forces of constant tractions on Gamma_3 facets
/// (f * area / 3 per facet node).
std::vector<double> assemble_load(const TetMesh& mesh, const LoadSpec& loads, LoadSummary* summary = nullptr);

/// All dofs of nodes on Gamma_2 facets.
std::vector<std::int64_t> fixed_dofs(const TetMesh& mesh);

/// Symmetric elimination: constrained rows and columns are zeroed with a unit
/// diagonal and the rhs carries the prescribed value; free rows are
/// corrected by -K_fc * g. values empty means homogeneous.
void apply_dirichlet(SparseSystem& system, std::span<const std::int64_t> dofs, std::span<const double> values = {});

/// Strain per tet from linear shape functions.
std::vector<Mat3> compute_strain(const TetMesh& mesh, std::span<const double> u);

Mat3 stress_from_strain(const Mat3& strain, double lambda, double mu);
std::vector<Mat3> compute_stress(const TetMesh& mesh, std::span<const Mat3> strain, const MaterialTable& materials);
double von_mises(const Mat3& stress);

struct Solution {
  std::vector<double> displacement;  // 3 per node
  std::vector<Mat3> strain;
  std::vector<Mat3> stress;
  std::vector<double> von_mises;
  SolverReport report;

  friend bool operator==(const Solution& a, const Solution& b) {
    return a.displacement == b.displacement && a.strain == b.strain && a.stress == b.stress &&
           a.von_mises == b.von_mises;
  }
};

struct StaticResult {
  Solution solution;
  LoadSummary loads;
  Vec3 total_reaction;  // sum of K u - f over constrained dofs
};

/// Assemble, load, clamp Gamma_2, solve and post-process.
StaticResult solve_static(const TetMesh& mesh, const MaterialTable& materials, const LoadSpec& loads,
                          const CgParams& params = {});

/// Strain, stress and von Mises for a given displacement field.
Solution postprocess(const TetMesh& mesh, const MaterialTable& materials, std::vector<double> displacement);

struct ToothMaxima {
  double max_displacement = 0.0;  // mm, over nodes of the tooth and its PDL
  double max_von_mises = 0.0;     // MPa, over tets of the tooth and its PDL
  std::size_t elements = 0;

  friend bool operator==(const ToothMaxima&, const ToothMaxima&) = default;
};

struct MaximaTable {
  std::map<int, ToothMaxima> rows;
  std::vector<std::string> warnings;
};

MaximaTable per_tooth_maxima(const Solution& solution, const TetMesh& mesh);

/// Legacy ASCII VTK unstructured grid with displacement (point), strain,
/// stress, von_mises and subdomain (cell) arrays. Without a solution only
/// the geometry and subdomain labels are written.
std::string export_vtk(const TetMesh& mesh, const Solution* solution = nullptr);

struct VtkGrid {
  std::vector<Vec3> points;
  std::vector<std::vector<std::int64_t>> cells;
  std::vector<int> cell_types;
  std::map<std::string, std::vector<double>> point_data;
  std::map<std::string, std::vector<double>> cell_data;
};

/// Reader for the subset of legacy VTK that export_vtk produces.
VtkGrid parse_vtk(std::string_view text);

/// Binary solution container ("DTSOLN01", little-endian).
std::vector<std::uint8_t> serialize_solution(const Solution& solution);
Solution deserialize_solution(std::span<const std::uint8_t> bytes);

}  // namespace dental
