#include "dental/elasticity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dental/error.hpp"

namespace dental {

Lame lame_from_engineering(double E, double nu) {
  if (!(E > 0.0) || !std::isfinite(E)) throw Error(Errc::parameter, "Young's modulus must be positive and finite");
  if (!(nu > -1.0) || !(nu < 0.5)) throw Error(Errc::parameter, "Poisson ratio must lie in (-1, 0.5)");
  if (0.5 - nu < 1e-6) {
    throw Error(Errc::near_incompressible, "Poisson ratio within 1e-6 of 0.5: linear tetrahedra lock");
  }
  return {E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
}

Material make_material(double E, double nu) {
  const auto l = lame_from_engineering(E, nu);
  return {E, nu, l.lambda, l.mu};
}

const Material& MaterialTable::resolve(std::uint32_t label) const {
  const auto sub = subdomain_of(label);
  if (sub.kind == SubdomainKind::background) throw Error(Errc::configuration, "background has no material");
  const std::string exact = labels::name(label);
  if (auto it = by_name.find(exact); it != by_name.end()) return it->second;
  if (sub.kind == SubdomainKind::pdl) {
    if (auto deg = tooth_mobility.find(sub.index); deg != tooth_mobility.end()) {
      auto m = mobility.find(deg->second);
      if (m == mobility.end()) {
        throw Error(Errc::configuration, "no PDL material for mobility degree " + std::to_string(deg->second) +
                                             " (needed by " + exact + ")");
      }
      return m->second;
    }
  }
  const std::string cls(kind_name(sub.kind));
  if (auto it = by_name.find(cls); it != by_name.end()) return it->second;
  if (sub.kind == SubdomainKind::pdl) {
    if (auto m = mobility.find(0); m != mobility.end()) return m->second;
  }
  throw Error(Errc::configuration, "no material for subdomain " + exact);
}

ShapeGradients shape_gradients(const std::array<Vec3, 4>& x) {
  const Vec3 c1 = x[1] - x[0], c2 = x[2] - x[0], c3 = x[3] - x[0];
  const double det = dot(c1, cross(c2, c3));
  const double scale = std::max({norm(c1), norm(c2), norm(c3)});
  if (!(det > 1e-12 * scale * scale * scale)) {
    throw Error(Errc::element, "degenerate or inverted tetrahedron (6V = " + std::to_string(det) + ")");
  }
  // Rows of J^-1 are the gradients of the barycentric coordinates 1..3.
  ShapeGradients out;
  out.grad[1] = (1.0 / det) * cross(c2, c3);
  out.grad[2] = (1.0 / det) * cross(c3, c1);
  out.grad[3] = (1.0 / det) * cross(c1, c2);
  out.grad[0] = -(out.grad[1] + out.grad[2] + out.grad[3]);
  out.volume = det / 6.0;
  return out;
}

ElementMatrix element_stiffness(const std::array<Vec3, 4>& x, double lambda, double mu) {
  const auto sg = shape_gradients(x);
  ElementMatrix k{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const Vec3& ga = sg.grad[a];
      const Vec3& gb = sg.grad[b];
      const double gg = dot(ga, gb);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const int r = 3 * a + i, c = 3 * b + j;
          if (c < r) continue;
          double v = lambda * ga[i] * gb[j] + mu * ga[j] * gb[i];
          if (i == j) v += mu * gg;
          // Mirrored so that K is symmetric to the last bit.
          k[static_cast<std::size_t>(r * 12 + c)] = k[static_cast<std::size_t>(c * 12 + r)] = sg.volume * v;
        }
      }
    }
  }
  return k;
}

namespace {

std::array<Vec3, 4> tet_coords(const TetMesh& mesh, std::size_t t) {
  const auto& tet = mesh.tets[t];
  return {mesh.nodes[static_cast<std::size_t>(tet[0])], mesh.nodes[static_cast<std::size_t>(tet[1])],
          mesh.nodes[static_cast<std::size_t>(tet[2])], mesh.nodes[static_cast<std::size_t>(tet[3])]};
}

CsrMatrix build_pattern(const TetMesh& mesh) {
  const std::size_t nn = mesh.node_count();
  std::vector<std::vector<std::int32_t>> adj(nn);
  for (const auto& tet : mesh.tets) {
    for (auto a : tet) {
      auto& row = adj[static_cast<std::size_t>(a)];
      for (auto b : tet) row.push_back(b);
    }
  }
  CsrMatrix m;
  m.rows = static_cast<std::int64_t>(3 * nn);
  m.row_ptr.assign(3 * nn + 1, 0);
  for (std::size_t n = 0; n < nn; ++n) {
    auto& row = adj[n];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (int c = 0; c < 3; ++c) {
      m.row_ptr[3 * n + static_cast<std::size_t>(c) + 1] =
          m.row_ptr[3 * n + static_cast<std::size_t>(c)] + static_cast<std::int64_t>(3 * row.size());
    }
  }
  m.cols.resize(static_cast<std::size_t>(m.row_ptr.back()));
  m.values.assign(m.cols.size(), 0.0);
  for (std::size_t n = 0; n < nn; ++n) {
    for (int c = 0; c < 3; ++c) {
      auto pos = static_cast<std::size_t>(m.row_ptr[3 * n + static_cast<std::size_t>(c)]);
      for (auto other : adj[n]) {
        for (int d = 0; d < 3; ++d) m.cols[pos++] = 3 * other + d;
      }
    }
  }
  return m;
}

}  // namespace

SparseSystem assemble(const TetMesh& mesh, const MaterialTable& materials) {
  if (mesh.nodes.size() * 3 > static_cast<std::size_t>(INT32_MAX)) throw Error(Errc::setup, "mesh too large");
  SparseSystem sys;
  sys.matrix = build_pattern(mesh);
  const auto ndof = static_cast<std::size_t>(sys.matrix.rows);
  sys.rhs.assign(ndof, 0.0);
  sys.constrained.assign(ndof, 0);
  sys.prescribed.assign(ndof, 0.0);

  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const Material& mat = materials.resolve(mesh.tet_labels[t]);
    ElementMatrix ke;
    try {
      ke = element_stiffness(tet_coords(mesh, t), mat.lambda, mat.mu);
    } catch (const Error& e) {
      throw Error(Errc::element, "tet " + std::to_string(t) + ": " + e.what());
    }
    const auto& tet = mesh.tets[t];
    for (int a = 0; a < 4; ++a) {
      for (int i = 0; i < 3; ++i) {
        const std::int64_t row = 3 * static_cast<std::int64_t>(tet[static_cast<std::size_t>(a)]) + i;
        for (int b = 0; b < 4; ++b) {
          for (int j = 0; j < 3; ++j) {
            const auto col = static_cast<std::int32_t>(3 * tet[static_cast<std::size_t>(b)] + j);
            *sys.matrix.find(row, col) += ke[static_cast<std::size_t>((3 * a + i) * 12 + 3 * b + j)];
          }
        }
      }
    }
  }
  return sys;
}

std::vector<double> assemble_load(const TetMesh& mesh, const LoadSpec& loads, LoadSummary* summary) {
  std::set<std::int32_t> patches;
  for (const auto& f : mesh.boundary) {
    if (f.tag == BoundaryTag::loaded) patches.insert(f.patch);
  }
  for (const auto& [id, tr] : loads.patches) {
    if (!patches.contains(id)) throw Error(Errc::reference, "load patch " + std::to_string(id) + " is not in the mesh");
    if (!std::isfinite(tr.magnitude)) throw Error(Errc::parameter, "traction magnitude must be finite");
  }
  if (loads.default_traction && !std::isfinite(loads.default_traction->magnitude)) {
    throw Error(Errc::parameter, "traction magnitude must be finite");
  }

  std::vector<double> f(3 * mesh.node_count(), 0.0);
  LoadSummary local;
  for (const auto& facet : mesh.boundary) {
    if (facet.tag != BoundaryTag::loaded) continue;
    const Traction* tr = nullptr;
    if (auto it = loads.patches.find(facet.patch); it != loads.patches.end()) {
      tr = &it->second;
    } else if (loads.default_traction) {
      tr = &*loads.default_traction;
    }
    const Vec3 an = facet_area_normal(mesh, facet);
    const double area = 0.5 * norm(an);
    local.patch_area[facet.patch] += area;
    Vec3 traction{};
    if (tr != nullptr) {
      if (tr->mode == TractionMode::normal_pressure) {
        traction = (-tr->magnitude / norm(an)) * an;
      } else {
        const double len = norm(tr->direction);
        if (!(len > 0.0)) throw Error(Errc::parameter, "fixed-vector traction needs a nonzero direction");
        traction = (tr->magnitude / len) * tr->direction;
      }
    }
    const Vec3 nodal = (area / 3.0) * traction;
    for (auto n : facet.nodes) {
      for (int c = 0; c < 3; ++c) f[3 * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] += nodal[c];
    }
    local.patch_force[facet.patch] = local.patch_force[facet.patch] + area * traction;
    local.total_force = local.total_force + area * traction;
  }
  if (summary != nullptr) *summary = std::move(local);
  return f;
}

std::vector<std::int64_t> fixed_dofs(const TetMesh& mesh) {
  std::vector<std::int32_t> nodes;
  for (const auto& f : mesh.boundary) {
    if (f.tag == BoundaryTag::fixed) nodes.insert(nodes.end(), f.nodes.begin(), f.nodes.end());
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<std::int64_t> dofs;
  dofs.reserve(3 * nodes.size());
  for (auto n : nodes) {
    for (int c = 0; c < 3; ++c) dofs.push_back(3 * static_cast<std::int64_t>(n) + c);
  }
  return dofs;
}

void apply_dirichlet(SparseSystem& system, std::span<const std::int64_t> dofs, std::span<const double> values) {
  if (dofs.empty()) throw Error(Errc::singular_setup, "no constrained dofs: the clamped boundary is empty");
  if (!values.empty() && values.size() != dofs.size()) {
    throw Error(Errc::parameter, "prescribed values do not match the constrained dofs");
  }
  auto& m = system.matrix;
  const auto ndof = static_cast<std::int64_t>(system.dofs());
  for (std::size_t n = 0; n < dofs.size(); ++n) {
    const auto d = dofs[n];
    if (d < 0 || d >= ndof) throw Error(Errc::bounds, "constrained dof out of range");
    system.constrained[static_cast<std::size_t>(d)] = 1;
    system.prescribed[static_cast<std::size_t>(d)] = values.empty() ? 0.0 : values[n];
  }
  for (std::int64_t r = 0; r < m.rows; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    for (auto e = m.row_ptr[ur]; e < m.row_ptr[ur + 1]; ++e) {
      const auto ue = static_cast<std::size_t>(e);
      const auto c = static_cast<std::size_t>(m.cols[ue]);
      if (system.constrained[ur]) {
        m.values[ue] = (c == ur) ? 1.0 : 0.0;
      } else if (system.constrained[c]) {
        system.rhs[ur] -= m.values[ue] * system.prescribed[c];
        m.values[ue] = 0.0;
      }
    }
    if (system.constrained[ur]) system.rhs[ur] = system.prescribed[ur];
  }
}

std::vector<Mat3> compute_strain(const TetMesh& mesh, std::span<const double> u) {
  std::vector<Mat3> out(mesh.tet_count());
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const auto sg = shape_gradients(tet_coords(mesh, t));
    Mat3 grad;
    for (int a = 0; a < 4; ++a) {
      const auto base = 3 * static_cast<std::size_t>(mesh.tets[t][static_cast<std::size_t>(a)]);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) grad(i, j) += u[base + static_cast<std::size_t>(i)] * sg.grad[a][j];
      }
    }
    out[t] = 0.5 * (grad + grad.transposed());
  }
  return out;
}

Mat3 stress_from_strain(const Mat3& strain, double lambda, double mu) {
  return 2.0 * mu * strain + (lambda * strain.trace()) * Mat3::identity();
}

std::vector<Mat3> compute_stress(const TetMesh& mesh, std::span<const Mat3> strain, const MaterialTable& materials) {
  std::vector<Mat3> out(strain.size());
  for (std::size_t t = 0; t < strain.size(); ++t) {
    const Material& m = materials.resolve(mesh.tet_labels[t]);
    out[t] = stress_from_strain(strain[t], m.lambda, m.mu);
  }
  return out;
}

double von_mises(const Mat3& stress) {
  const Mat3 s = stress - (stress.trace() / 3.0) * Mat3::identity();
  return std::sqrt(1.5 * contract(s, s));
}

Solution postprocess(const TetMesh& mesh, const MaterialTable& materials, std::vector<double> displacement) {
  Solution sol;
  sol.displacement = std::move(displacement);
  sol.strain = compute_strain(mesh, sol.displacement);
  sol.stress = compute_stress(mesh, sol.strain, materials);
  sol.von_mises.resize(sol.stress.size());
  for (std::size_t t = 0; t < sol.stress.size(); ++t) sol.von_mises[t] = von_mises(sol.stress[t]);
  return sol;
}

StaticResult solve_static(const TetMesh& mesh, const MaterialTable& materials, const LoadSpec& loads,
                          const CgParams& params) {
  SparseSystem sys = assemble(mesh, materials);
  const CsrMatrix k0 = sys.matrix;
  StaticResult out;
  const std::vector<double> f = assemble_load(mesh, loads, &out.loads);
  sys.rhs = f;
  const auto dofs = fixed_dofs(mesh);
  apply_dirichlet(sys, dofs);

  auto cg = solve_cg(sys.matrix, sys.rhs, params);
  for (auto d : dofs) cg.x[static_cast<std::size_t>(d)] = sys.prescribed[static_cast<std::size_t>(d)];
  out.solution = postprocess(mesh, materials, std::move(cg.x));
  out.solution.report = std::move(cg.report);

  const auto ku = k0.multiply(out.solution.displacement);
  for (auto d : dofs) {
    const auto ud = static_cast<std::size_t>(d);
    out.total_reaction[static_cast<int>(d % 3)] += ku[ud] - f[ud];
  }
  return out;
}

MaximaTable per_tooth_maxima(const Solution& solution, const TetMesh& mesh) {
  MaximaTable table;
  std::map<int, std::set<std::int32_t>> nodes;
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const auto sub = mesh.subdomain(t);
    if (sub.kind != SubdomainKind::tooth && sub.kind != SubdomainKind::pdl) continue;
    auto& row = table.rows[sub.index];
    ++row.elements;
    if (t < solution.von_mises.size()) row.max_von_mises = std::max(row.max_von_mises, solution.von_mises[t]);
    nodes[sub.index].insert(mesh.tets[t].begin(), mesh.tets[t].end());
  }
  for (auto& [tooth, set] : nodes) {
    double best = 0.0;
    for (auto n : set) {
      const auto b = 3 * static_cast<std::size_t>(n);
      if (b + 2 >= solution.displacement.size()) continue;
      best = std::max(best, std::sqrt(solution.displacement[b] * solution.displacement[b] +
                                      solution.displacement[b + 1] * solution.displacement[b + 1] +
                                      solution.displacement[b + 2] * solution.displacement[b + 2]));
    }
    table.rows[tooth].max_displacement = best;
  }
  for (const auto& [label, name] : mesh.label_names) {
    if (!labels::is_tooth(label)) continue;
    const int tooth = *labels::tooth_number(label);
    if (!table.rows.contains(tooth)) table.warnings.push_back(name + " has no elements; omitted from the maxima table");
  }
  return table;
}

}  // namespace dental
