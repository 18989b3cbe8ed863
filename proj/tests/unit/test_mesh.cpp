#include <gtest/gtest.h>

#include <random>
#include <set>

#include "dental/geometry.hpp"
#include "dental/mesh.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dental;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::usage;
}

std::array<std::int32_t, 3> sorted(std::array<std::int32_t, 3> f) {
  std::sort(f.begin(), f.end());
  return f;
}

Vec3 tet_centroid(const TetMesh& m, std::size_t t) {
  Vec3 c;
  for (auto n : m.tets[t]) c = c + m.nodes[static_cast<std::size_t>(n)];
  return 0.25 * c;
}

}  // namespace

TEST(Tets, SingleVoxel) {
  const TetMesh m = voxels_to_tets(fixtures::box_labels({1, 1, 1}, 1.0));
  ASSERT_EQ(m.tet_count(), 6u);
  EXPECT_EQ(m.node_count(), 8u);
  double total = 0.0;
  for (std::size_t t = 0; t < 6; ++t) {
    const auto& tet = m.tets[t];
    const double v = signed_volume(m.nodes[tet[0]], m.nodes[tet[1]], m.nodes[tet[2]], m.nodes[tet[3]]);
    EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
    total += tet_volume(m, t);
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_EQ(m.boundary.size(), 12u);
  EXPECT_TRUE(audit_mesh(m).conforming());
}

TEST(Tets, NodesAreVoxelCorners) {
  const TetMesh m = voxels_to_tets(fixtures::box_labels({1, 1, 1}, 0.5));
  // Voxel centre sits at the origin, so corners are at +-0.25.
  for (const auto& p : m.nodes) {
    EXPECT_EQ(std::abs(p.x), 0.25);
    EXPECT_EQ(std::abs(p.y), 0.25);
    EXPECT_EQ(std::abs(p.z), 0.25);
  }
}

TEST(Tets, AdjacentVoxelsShareSplitFace) {
  for (int axis = 0; axis < 3; ++axis) {
    Index3 d{1, 1, 1};
    d[axis] = 2;
    const TetMesh m = voxels_to_tets(fixtures::box_labels(d, 1.0));
    EXPECT_EQ(m.node_count(), 12u);
    const auto inc = oracles::facet_incidence(m);
    int shared = 0;
    for (const auto& [f, c] : inc) {
      EXPECT_LE(c, 2);
      shared += c == 2;
    }
    // 6 interior facets per voxel plus the 2 triangles of the shared face.
    EXPECT_EQ(shared, 6 * 2 + 2);
    EXPECT_TRUE(audit_mesh(m).conforming());
  }
}

TEST(Tets, EmptyDomain) {
  const LabelVolume v = make_label_volume(Grid{{3, 3, 3}});
  EXPECT_EQ(code_of([&] { voxels_to_tets(v); }), Errc::empty_domain);
}

TEST(Tets, RandomVolumesAuditIndependently) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    LabelVolume v = fixtures::random_labels(rng, {6, 6, 6}, 0.5, 4);
    v.grid.spacing = {0.5, 0.25, 0.75};
    const TetMesh m = voxels_to_tets(v);
    std::map<std::uint32_t, std::size_t> voxels, tets;
    for (auto l : v.data)
      if (l) ++voxels[l];
    for (auto l : m.tet_labels) ++tets[l];
    for (const auto& [l, c] : voxels) EXPECT_EQ(tets[l], 6 * c);

    const auto inc = oracles::facet_incidence(m);
    std::set<std::array<std::int32_t, 3>> boundary_oracle;
    for (const auto& [f, c] : inc) {
      ASSERT_TRUE(c == 1 || c == 2);
      if (c == 1) boundary_oracle.insert(f);
    }
    std::set<std::array<std::int32_t, 3>> boundary;
    for (const auto& f : m.boundary) {
      boundary.insert(sorted(f.nodes));
      // Outward: normal points away from the owning tet.
      const Vec3 n = facet_area_normal(m, f);
      EXPECT_GT(dot(n, facet_centroid(m, f) - tet_centroid(m, static_cast<std::size_t>(f.tet))), 0.0);
      EXPECT_EQ(f.tag, BoundaryTag::free);
    }
    EXPECT_EQ(boundary, boundary_oracle);
    EXPECT_EQ(boundary.size(), m.boundary.size());

    double volume = 0.0;
    for (std::size_t t = 0; t < m.tet_count(); ++t) {
      const auto& tet = m.tets[t];
      EXPECT_GT(signed_volume(m.nodes[tet[0]], m.nodes[tet[1]], m.nodes[tet[2]], m.nodes[tet[3]]), 0.0);
      volume += tet_volume(m, t);
    }
    std::size_t labeled = 0;
    for (const auto& [l, c] : voxels) labeled += c;
    const double expect = static_cast<double>(labeled) * v.grid.voxel_volume();
    EXPECT_LE(std::abs(volume - expect), 1e-10 * expect);

    const MeshAudit a = audit_mesh(m);
    EXPECT_TRUE(a.conforming());
    EXPECT_EQ(a.boundary_facets, boundary_oracle.size());
    EXPECT_EQ(a.interior_facets, inc.size() - boundary_oracle.size());
  }
}

TEST(Audit, DetectsDefects) {
  TetMesh m = voxels_to_tets(fixtures::box_labels({2, 1, 1}, 1.0));
  TetMesh inverted = m;
  std::swap(inverted.tets[0][1], inverted.tets[0][2]);
  EXPECT_EQ(audit_mesh(inverted).non_positive_tets, 1u);

  TetMesh duplicated = m;
  duplicated.tets.push_back(m.tets[0]);
  duplicated.tet_labels.push_back(m.tet_labels[0]);
  duplicated.tet_voxel.push_back(m.tet_voxel[0]);
  EXPECT_GT(audit_mesh(duplicated).bad_incidence, 0u);

  TetMesh dropped = m;
  dropped.boundary.pop_back();
  EXPECT_EQ(audit_mesh(dropped).untagged_or_mismatched, 1u);
}

TEST(MeshContainer, RoundTrip) {
  std::mt19937_64 rng(2);
  const LabelVolume v = fixtures::random_labels(rng, {5, 4, 3}, 0.6, 3);
  TetMesh m = tag_box_faces(voxels_to_tets(v), {BoxFace::x_lo}, {BoxFace::x_hi}).mesh;
  const auto bytes = serialize_mesh(m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "DTMESH01");
  EXPECT_EQ(deserialize_mesh(bytes), m);
  EXPECT_EQ(serialize_mesh(deserialize_mesh(bytes)), bytes);
}

TEST(MeshContainer, RejectsCorruptBytes) {
  const TetMesh m = voxels_to_tets(fixtures::box_labels({1, 1, 1}, 1.0));
  auto bytes = serialize_mesh(m);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_mesh(bad_magic); }), Errc::format);
  auto cut = bytes;
  cut.resize(cut.size() / 2);
  EXPECT_THROW(deserialize_mesh(cut), Error);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_EQ(code_of([&] { deserialize_mesh(extra); }), Errc::format);
}
