#include "dental/mesh.hpp"

#include <algorithm>
#include <limits>

#include "binary_io.hpp"

namespace dental {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return dot(b - a, cross(c - a, d - a)) / 6.0;
}

double tet_volume(const TetMesh& mesh, std::size_t t) {
  const auto& n = mesh.tets[t];
  return signed_volume(mesh.nodes[n[0]], mesh.nodes[n[1]], mesh.nodes[n[2]], mesh.nodes[n[3]]);
}

Vec3 facet_area_normal(const TetMesh& mesh, const BoundaryFacet& f) {
  const Vec3& a = mesh.nodes[f.nodes[0]];
  return cross(mesh.nodes[f.nodes[1]] - a, mesh.nodes[f.nodes[2]] - a);
}

double facet_area(const TetMesh& mesh, const BoundaryFacet& f) { return 0.5 * norm(facet_area_normal(mesh, f)); }

Vec3 facet_centroid(const TetMesh& mesh, const BoundaryFacet& f) {
  return (1.0 / 3.0) * (mesh.nodes[f.nodes[0]] + mesh.nodes[f.nodes[1]] + mesh.nodes[f.nodes[2]]);
}

namespace {

struct FaceRef {
  std::array<std::int32_t, 3> key;  // sorted node ids
  std::int32_t tet;
  std::int8_t opposite;  // local index of the vertex not on the face
};

std::vector<FaceRef> sorted_faces(const TetMesh& mesh) {
  std::vector<FaceRef> faces;
  faces.reserve(mesh.tets.size() * 4);
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& n = mesh.tets[t];
    for (std::int8_t o = 0; o < 4; ++o) {
      std::array<std::int32_t, 3> key{};
      int m = 0;
      for (int v = 0; v < 4; ++v)
        if (v != o) key[m++] = n[v];
      std::sort(key.begin(), key.end());
      faces.push_back({key, static_cast<std::int32_t>(t), o});
    }
  }
  std::sort(faces.begin(), faces.end(), [](const FaceRef& a, const FaceRef& b) {
    return a.key != b.key ? a.key < b.key : a.tet < b.tet;
  });
  return faces;
}

BoundaryFacet oriented_facet(const TetMesh& mesh, const FaceRef& f) {
  const auto& n = mesh.tets[static_cast<std::size_t>(f.tet)];
  std::array<std::int32_t, 3> tri{};
  int m = 0;
  for (int v = 0; v < 4; ++v)
    if (v != f.opposite) tri[m++] = n[v];
  const Vec3& p = mesh.nodes[tri[0]];
  const Vec3 normal = cross(mesh.nodes[tri[1]] - p, mesh.nodes[tri[2]] - p);
  if (dot(normal, mesh.nodes[n[f.opposite]] - p) > 0.0) std::swap(tri[1], tri[2]);
  return {tri, BoundaryTag::free, 0, f.tet};
}

}  // namespace

std::vector<BoundaryFacet> extract_boundary(const TetMesh& mesh) {
  const auto faces = sorted_faces(mesh);
  std::vector<BoundaryFacet> out;
  for (std::size_t a = 0; a < faces.size();) {
    std::size_t b = a + 1;
    while (b < faces.size() && faces[b].key == faces[a].key) ++b;
    if (b - a == 1) out.push_back(oriented_facet(mesh, faces[a]));
    a = b;
  }
  std::sort(out.begin(), out.end(), [](const BoundaryFacet& x, const BoundaryFacet& y) {
    return x.tet != y.tet ? x.tet < y.tet : x.nodes < y.nodes;
  });
  return out;
}

MeshAudit audit_mesh(const TetMesh& mesh) {
  MeshAudit audit;
  audit.tets = mesh.tets.size();
  audit.min_volume = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const double v = tet_volume(mesh, t);
    audit.min_volume = std::min(audit.min_volume, v);
    audit.total_volume += v;
    if (!(v > 0.0)) ++audit.non_positive_tets;
  }

  const auto faces = sorted_faces(mesh);
  std::vector<std::array<std::int32_t, 3>> boundary_keys;
  for (std::size_t a = 0; a < faces.size();) {
    std::size_t b = a + 1;
    while (b < faces.size() && faces[b].key == faces[a].key) ++b;
    if (b - a == 1) {
      ++audit.boundary_facets;
      boundary_keys.push_back(faces[a].key);
    } else if (b - a == 2) {
      ++audit.interior_facets;
    } else {
      ++audit.bad_incidence;
    }
    a = b;
  }

  std::vector<std::array<std::int32_t, 3>> listed;
  listed.reserve(mesh.boundary.size());
  for (const auto& f : mesh.boundary) {
    auto key = f.nodes;
    std::sort(key.begin(), key.end());
    listed.push_back(key);
  }
  std::sort(listed.begin(), listed.end());
  // boundary_keys is already sorted; count symmetric differences.
  std::vector<std::array<std::int32_t, 3>> diff;
  std::set_symmetric_difference(listed.begin(), listed.end(), boundary_keys.begin(), boundary_keys.end(),
                                std::back_inserter(diff));
  audit.untagged_or_mismatched = diff.size() + (listed.size() - static_cast<std::size_t>(
                                                    std::unique(listed.begin(), listed.end()) - listed.begin()));
  if (mesh.tets.empty()) audit.min_volume = 0.0;
  return audit;
}

namespace {
constexpr std::string_view kMeshMagic = "DTMESH01";
}

std::vector<std::uint8_t> serialize_mesh(const TetMesh& mesh) {
  detail::BinaryWriter w;
  w.put_bytes(kMeshMagic);
  for (int a = 0; a < 3; ++a) w.put<std::int64_t>(mesh.grid.dims[a]);
  for (int a = 0; a < 3; ++a) w.put<double>(mesh.grid.spacing[a]);
  for (int a = 0; a < 3; ++a) w.put<double>(mesh.grid.origin[a]);

  w.put<std::uint64_t>(mesh.nodes.size());
  for (const auto& p : mesh.nodes) {
    w.put(p.x);
    w.put(p.y);
    w.put(p.z);
  }
  w.put<std::uint64_t>(mesh.tets.size());
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    for (auto n : mesh.tets[t]) w.put<std::int32_t>(n);
    w.put<std::uint32_t>(mesh.tet_labels[t]);
    w.put<std::int64_t>(t < mesh.tet_voxel.size() ? mesh.tet_voxel[t] : -1);
  }
  w.put<std::uint64_t>(mesh.boundary.size());
  for (const auto& f : mesh.boundary) {
    for (auto n : f.nodes) w.put<std::int32_t>(n);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(f.tag));
    w.put<std::int32_t>(f.patch);
    w.put<std::int32_t>(f.tet);
  }
  w.put<std::uint64_t>(mesh.label_names.size());
  for (const auto& [label, name] : mesh.label_names) {
    w.put<std::uint32_t>(label);
    w.put_string(name);
  }
  return w.take();
}

TetMesh deserialize_mesh(std::span<const std::uint8_t> bytes) {
  detail::BinaryReader r(bytes);
  if (r.get_bytes(kMeshMagic.size()) != kMeshMagic) throw Error(Errc::format, "not a DTMESH01 container");
  TetMesh mesh;
  for (int a = 0; a < 3; ++a) mesh.grid.dims[a] = r.get<std::int64_t>();
  for (int a = 0; a < 3; ++a) mesh.grid.spacing[a] = r.get<double>();
  for (int a = 0; a < 3; ++a) mesh.grid.origin[a] = r.get<double>();

  mesh.nodes.resize(r.get_count(24));
  for (auto& p : mesh.nodes) {
    p.x = r.get<double>();
    p.y = r.get<double>();
    p.z = r.get<double>();
  }
  const auto ntets = r.get_count(28);
  mesh.tets.resize(ntets);
  mesh.tet_labels.resize(ntets);
  mesh.tet_voxel.resize(ntets);
  bool has_voxels = true;
  for (std::size_t t = 0; t < ntets; ++t) {
    for (auto& n : mesh.tets[t]) {
      n = r.get<std::int32_t>();
      if (n < 0 || static_cast<std::size_t>(n) >= mesh.nodes.size()) throw Error(Errc::format, "tet node id out of range");
    }
    mesh.tet_labels[t] = r.get<std::uint32_t>();
    mesh.tet_voxel[t] = r.get<std::int64_t>();
    has_voxels = has_voxels && mesh.tet_voxel[t] >= 0;
  }
  if (!has_voxels) mesh.tet_voxel.clear();
  mesh.boundary.resize(r.get_count(21));
  for (auto& f : mesh.boundary) {
    for (auto& n : f.nodes) {
      n = r.get<std::int32_t>();
      if (n < 0 || static_cast<std::size_t>(n) >= mesh.nodes.size()) throw Error(Errc::format, "facet node id out of range");
    }
    const auto tag = r.get<std::uint8_t>();
    if (tag < 1 || tag > 3) throw Error(Errc::format, "invalid boundary tag");
    f.tag = static_cast<BoundaryTag>(tag);
    f.patch = r.get<std::int32_t>();
    f.tet = r.get<std::int32_t>();
  }
  const auto nnames = r.get_count(8);
  for (std::size_t n = 0; n < nnames; ++n) {
    const auto label = r.get<std::uint32_t>();
    mesh.label_names[label] = r.get_string();
  }
  if (!r.at_end()) throw Error(Errc::format, "trailing bytes after mesh container");
  return mesh;
}

}  // namespace dental
