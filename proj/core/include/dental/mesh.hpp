#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dental/labels.hpp"
#include "dental/vec.hpp"
#include "dental/volume.hpp"

namespace dental {

/// Boundary regions: Gamma_1 traction free, Gamma_2 clamped, Gamma_3 loaded.
enum class BoundaryTag : std::uint8_t { free = 1, fixed = 2, loaded = 3 };

struct BoundaryFacet {
  std::array<std::int32_t, 3> nodes{};  // counter-clockwise seen from outside
  BoundaryTag tag = BoundaryTag::free;
  std::int32_t patch = 0;  // load patch id for Gamma_3 facets, 0 otherwise
  std::int32_t tet = -1;   // owning tetrahedron

  friend bool operator==(const BoundaryFacet&, const BoundaryFacet&) = default;
};

struct TetMesh {
  Grid grid;  // voxel grid the mesh was generated from
  std::vector<Vec3> nodes;
  std::vector<std::array<std::int32_t, 4>> tets;
  std::vector<std::uint32_t> tet_labels;
  std::vector<std::int64_t> tet_voxel;  // linear voxel index in `grid`
  std::vector<BoundaryFacet> boundary;
  std::map<std::uint32_t, std::string> label_names;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t tet_count() const { return tets.size(); }
  SubdomainId subdomain(std::size_t tet) const { return subdomain_of(tet_labels[tet]); }

  friend bool operator==(const TetMesh&, const TetMesh&) = default;
};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double tet_volume(const TetMesh& mesh, std::size_t tet);

/// Area-weighted outward normal (length = 2 * area).
Vec3 facet_area_normal(const TetMesh& mesh, const BoundaryFacet& facet);
double facet_area(const TetMesh& mesh, const BoundaryFacet& facet);
Vec3 facet_centroid(const TetMesh& mesh, const BoundaryFacet& facet);

/// Facets used by exactly one tet, oriented outward, tagged free.
std::vector<BoundaryFacet> extract_boundary(const TetMesh& mesh);

struct MeshAudit {
  std::size_t tets = 0;
  std::size_t interior_facets = 0;
  std::size_t boundary_facets = 0;
  std::size_t bad_incidence = 0;        // facets shared by more than 2 tets
  std::size_t non_positive_tets = 0;
  std::size_t untagged_or_mismatched = 0;  // boundary list vs. incidence-1 facets
  double min_volume = 0.0;
  double total_volume = 0.0;

  bool conforming() const { return bad_incidence == 0 && non_positive_tets == 0 && untagged_or_mismatched == 0; }
};

/// Facet incidence and volume audit of the mesh invariants.
MeshAudit audit_mesh(const TetMesh& mesh);

/// Binary mesh container ("DTMESH01", little-endian).
std::vector<std::uint8_t> serialize_mesh(const TetMesh& mesh);
TetMesh deserialize_mesh(std::span<const std::uint8_t> bytes);

}  // namespace dental
