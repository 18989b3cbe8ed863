#include "dental/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dental/labels.hpp"
#include "dental/segmentation.hpp"

namespace dental {

ToothSettings ProsthesisSpec::settings(int tooth) const {
  const auto it = teeth.find(tooth);
  return it == teeth.end() ? ToothSettings{} : it->second;
}

void ProsthesisSpec::validate(bool bridge) const {
  labels::prosthesis(index);
  if (supporting_teeth.empty() || (bridge && supporting_teeth.size() < 2)) {
    throw Error(Errc::parameter, bridge ? "a bridge needs at least two supporting teeth"
                                        : "at least one supporting tooth is required");
  }
  std::vector<int> sorted = supporting_teeth;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::parameter, "supporting teeth listed twice");
  }
  for (int t : supporting_teeth) labels::tooth(t);
  if (!(crown_thickness_mm >= 0.0)) throw Error(Errc::parameter, "crown thickness must be >= 0");
  if (!(pontic_height_mm >= 0.0)) throw Error(Errc::parameter, "pontic height must be >= 0");
  if (!(load_center_fraction > 0.0 && load_center_fraction <= 1.0)) {
    throw Error(Errc::parameter, "load_center_fraction must lie in (0, 1]");
  }
  for (const auto& [tooth, s] : teeth) {
    if (s.mobility_degree < 0 || s.mobility_degree > 3) {
      throw Error(Errc::parameter, "mobility degree of tooth " + std::to_string(tooth) + " must be 0..3");
    }
    if (!(s.pdl_thickness_mm > 0.0)) {
      throw Error(Errc::parameter, "PDL thickness of tooth " + std::to_string(tooth) + " must be positive");
    }
  }
}

std::string_view face_name(BoxFace f) {
  static constexpr std::array<std::string_view, 6> names = {"x-", "x+", "y-", "y+", "z-", "z+"};
  return names[static_cast<std::size_t>(f)];
}

std::optional<BoxFace> parse_face(std::string_view name) {
  for (int f = 0; f < 6; ++f)
    if (face_name(static_cast<BoxFace>(f)) == name) return static_cast<BoxFace>(f);
  return std::nullopt;
}

bool CutFaces::any() const { return std::find(cut.begin(), cut.end(), true) != cut.end(); }

std::array<double, 6> grid_face_planes(const Grid& g) {
  const Vec3 lo = g.corner({0, 0, 0});
  const Vec3 hi = g.corner(g.dims);
  return {lo.x, hi.x, lo.y, hi.y, lo.z, hi.z};
}

CutFaces faces_touching(const LabelVolume& labels_in, std::uint32_t label) {
  const Grid& g = labels_in.grid;
  CutFaces faces;
  faces.plane = grid_face_planes(g);
  for (int f = 0; f < 6; ++f) {
    const int axis = f / 2;
    const std::int64_t layer = f % 2 == 0 ? 0 : g.dims[axis] - 1;
    const int u = axis == 0 ? 1 : 0;
    const int v = axis == 2 ? 1 : 2;
    Index3 p;
    p[axis] = layer;
    for (p[v] = 0; p[v] < g.dims[v] && !faces.cut[f]; ++p[v])
      for (p[u] = 0; p[u] < g.dims[u]; ++p[u])
        if (labels_in.at(p) == label) {
          faces.cut[f] = true;
          break;
        }
  }
  return faces;
}

VoxelBox label_bounding_box(const LabelVolume& labels_in, std::uint32_t label) {
  const Grid& g = labels_in.grid;
  VoxelBox box{{g.dims.i, g.dims.j, g.dims.k}, {0, 0, 0}};
  for (std::int64_t n = 0; n < g.count(); ++n) {
    if (labels_in.data[static_cast<std::size_t>(n)] != label) continue;
    const Index3 p = g.unravel(n);
    for (int a = 0; a < 3; ++a) {
      box.lo[a] = std::min(box.lo[a], p[a]);
      box.hi[a] = std::max(box.hi[a], p[a] + 1);
    }
  }
  if (box.empty()) return {};
  return box;
}

namespace {

VoxelBox supporting_box(const LabelVolume& labels_in, int tooth) {
  const VoxelBox box = label_bounding_box(labels_in, labels::tooth(tooth));
  if (box.empty()) throw Error(Errc::reference, "supporting tooth " + std::to_string(tooth) + " not found");
  return box;
}

}  // namespace

FragmentResult select_fragment(const LabelVolume& labels_in, const ProsthesisSpec& spec, double margin_factor) {
  labels_in.validate();
  spec.validate(false);
  if (!(margin_factor >= 1.5 && margin_factor <= 2.0)) {
    throw Error(Errc::parameter, "margin factor must lie in [1.5, 2]");
  }
  const Grid& g = labels_in.grid;
  FragmentResult result;

  VoxelBox all{{g.dims.i, g.dims.j, g.dims.k}, {0, 0, 0}};
  for (int t : spec.supporting_teeth) {
    const VoxelBox box = supporting_box(labels_in, t);
    for (int a = 0; a < 3; ++a) {
      all.lo[a] = std::min(all.lo[a], box.lo[a]);
      all.hi[a] = std::max(all.hi[a], box.hi[a]);
    }
    result.root_length_mm = std::max(result.root_length_mm, static_cast<double>(box.hi.k - box.lo.k) * g.spacing.z);
  }
  result.margin_mm = margin_factor * result.root_length_mm;

  for (int a = 0; a < 3; ++a) {
    const auto grow = static_cast<std::int64_t>(std::ceil(result.margin_mm / g.spacing[a] - 1e-9));
    result.roi.lo[a] = all.lo[a] - grow;
    result.roi.hi[a] = all.hi[a] + grow;
    if (result.roi.lo[a] < 0) {
      result.roi.lo[a] = 0;
      result.warnings.push_back("margin clamped at face " + std::string(face_name(static_cast<BoxFace>(2 * a))));
    }
    if (result.roi.hi[a] > g.dims[a]) {
      result.roi.hi[a] = g.dims[a];
      result.warnings.push_back("margin clamped at face " + std::string(face_name(static_cast<BoxFace>(2 * a + 1))));
    }
  }
  result.labels = crop(labels_in, result.roi);
  result.faces = faces_touching(result.labels, labels::kJaw);
  return result;
}

LabelVolume keep_supporting_teeth(const LabelVolume& labels_in, const ProsthesisSpec& spec) {
  LabelVolume out = labels_in;
  for (auto& l : out.data) {
    const auto tooth = labels::tooth_number(l);
    if (tooth && std::find(spec.supporting_teeth.begin(), spec.supporting_teeth.end(), *tooth) ==
                     spec.supporting_teeth.end()) {
      l = labels::kBackground;
    }
  }
  std::erase_if(out.label_names, [&](const auto& kv) {
    const auto tooth = labels::tooth_number(kv.first);
    return tooth && std::find(spec.supporting_teeth.begin(), spec.supporting_teeth.end(), *tooth) ==
                        spec.supporting_teeth.end();
  });
  return out;
}

namespace {

struct Claim {
  double d2 = std::numeric_limits<double>::infinity();
  int source = 0;
};

/// For every voxel with label `target`, the closest source voxel (by center
/// distance, at most radius) across the given sources. Only surface voxels
/// of a source need to be visited: the nearest voxel of a set to an outside
/// point always has a neighbour outside the set.
void claim_within(const LabelVolume& labels_in, std::uint32_t target, int source_tooth, std::uint32_t source_label,
                  double radius, std::vector<Claim>& claims) {
  const Grid& g = labels_in.grid;
  const double r2 = radius * radius * (1.0 + 1e-12);
  Index3 reach;
  for (int a = 0; a < 3; ++a) reach[a] = static_cast<std::int64_t>(std::floor(radius / g.spacing[a] + 1e-9));
  const auto& six = neighbour_offsets(Connectivity::six);

  for (std::int64_t n = 0; n < g.count(); ++n) {
    if (labels_in.data[static_cast<std::size_t>(n)] != source_label) continue;
    const Index3 p = g.unravel(n);
    bool surface = false;
    for (const auto& d : six) {
      const Index3 q{p.i + d.i, p.j + d.j, p.k + d.k};
      if (!g.contains(q) || labels_in.at(q) != source_label) {
        surface = true;
        break;
      }
    }
    if (!surface) continue;
    for (std::int64_t dk = -reach.k; dk <= reach.k; ++dk)
      for (std::int64_t dj = -reach.j; dj <= reach.j; ++dj)
        for (std::int64_t di = -reach.i; di <= reach.i; ++di) {
          const Index3 q{p.i + di, p.j + dj, p.k + dk};
          if (!g.contains(q)) continue;
          const auto m = static_cast<std::size_t>(g.linear(q));
          if (labels_in.data[m] != target) continue;
          const double dx = static_cast<double>(di) * g.spacing.x;
          const double dy = static_cast<double>(dj) * g.spacing.y;
          const double dz = static_cast<double>(dk) * g.spacing.z;
          const double d2 = dx * dx + dy * dy + dz * dz;
          if (d2 > r2) continue;
          Claim& c = claims[m];
          if (d2 < c.d2 || (d2 == c.d2 && source_tooth < c.source)) c = {d2, source_tooth};
        }
  }
}

}  // namespace

LabelVolume generate_pdl(const LabelVolume& labels_in, const std::map<int, double>& thickness_mm) {
  labels_in.validate();
  for (const auto& [tooth, thickness] : thickness_mm) {
    labels::tooth(tooth);
    if (!(thickness > 0.0)) {
      throw Error(Errc::parameter, "PDL thickness for tooth " + std::to_string(tooth) + " must be positive");
    }
  }
  std::vector<Claim> claims(labels_in.data.size());
  for (const auto& [tooth, thickness] : thickness_mm) {
    claim_within(labels_in, labels::kJaw, tooth, labels::tooth(tooth), thickness, claims);
  }
  LabelVolume out = labels_in;
  for (std::size_t n = 0; n < claims.size(); ++n) {
    if (claims[n].source == 0) continue;
    const auto l = labels::pdl(claims[n].source);
    out.data[n] = l;
    out.label_names[l] = labels::name(l);
  }
  return out;
}

BridgeLayout layout_bridge(const LabelVolume& labels_in, const ProsthesisSpec& spec) {
  spec.validate(false);
  const Grid& g = labels_in.grid;
  BridgeLayout layout;
  for (int t : spec.supporting_teeth) layout.tooth_boxes[t] = supporting_box(labels_in, t);

  auto center = [&](int t, int axis) {
    const auto& b = layout.tooth_boxes.at(t);
    return 0.5 * static_cast<double>(b.lo[axis] + b.hi[axis]) * g.spacing[axis];
  };
  double spread[2] = {0.0, 0.0};
  for (int axis = 0; axis < 2; ++axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int t : spec.supporting_teeth) {
      lo = std::min(lo, center(t, axis));
      hi = std::max(hi, center(t, axis));
    }
    spread[axis] = hi - lo;
  }
  layout.span_axis = spread[1] > spread[0] ? 1 : 0;
  layout.transverse_axis = 1 - layout.span_axis;

  layout.ordered_teeth = spec.supporting_teeth;
  std::sort(layout.ordered_teeth.begin(), layout.ordered_teeth.end(), [&](int a, int b) {
    const double ca = center(a, layout.span_axis);
    const double cb = center(b, layout.span_axis);
    return ca != cb ? ca < cb : a < b;
  });

  std::int64_t top_lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t top_hi = 0;
  for (const auto& [t, b] : layout.tooth_boxes) {
    top_lo = std::min(top_lo, b.hi.k);
    top_hi = std::max(top_hi, b.hi.k);
  }
  if (static_cast<double>(top_hi - top_lo) * g.spacing.z > spec.coplanar_tolerance_mm) {
    layout.warnings.push_back("supporting crowns are not coplanar within " +
                              std::to_string(spec.coplanar_tolerance_mm) + " mm");
  }

  const int s = layout.span_axis;
  const int tr = layout.transverse_axis;
  for (std::size_t n = 0; n + 1 < layout.ordered_teeth.size(); ++n) {
    const VoxelBox& a = layout.tooth_boxes.at(layout.ordered_teeth[n]);
    const VoxelBox& b = layout.tooth_boxes.at(layout.ordered_teeth[n + 1]);
    VoxelBox p;
    p.lo[s] = a.hi[s];
    p.hi[s] = b.lo[s];
    p.lo[tr] = std::max(a.lo[tr], b.lo[tr]);
    p.hi[tr] = std::min(a.hi[tr], b.hi[tr]);
    if (p.hi[tr] <= p.lo[tr]) {
      p.lo[tr] = std::min(a.lo[tr], b.lo[tr]);
      p.hi[tr] = std::max(a.hi[tr], b.hi[tr]);
    }
    const std::int64_t top = std::min(a.hi.k, b.hi.k);
    std::int64_t height = 0;
    if (spec.pontic_height_mm > 0.0) {
      height = std::max<std::int64_t>(1, std::llround(spec.pontic_height_mm / g.spacing.z));
    } else {
      const auto shorter = std::min(a.hi.k - a.lo.k, b.hi.k - b.lo.k);
      height = std::max<std::int64_t>(1, (shorter + 1) / 3);
    }
    p.hi.k = top;
    p.lo.k = std::max<std::int64_t>(0, top - height);
    if (p.hi[s] <= p.lo[s]) p = {};
    layout.pontics.push_back(p);
  }
  return layout;
}

BridgeResult build_bridge(const LabelVolume& labels_in, const ProsthesisSpec& spec) {
  labels_in.validate();
  spec.validate(false);  // one supporting tooth gives a single crown
  BridgeResult result;
  result.layout = layout_bridge(labels_in, spec);
  result.warnings = result.layout.warnings;

  const Grid& g = labels_in.grid;
  const std::uint32_t label = labels::prosthesis(spec.index);
  std::vector<Claim> claims(labels_in.data.size());
  if (spec.crown_thickness_mm > 0.0) {
    for (int t : spec.supporting_teeth) {
      claim_within(labels_in, labels::kBackground, t, labels::tooth(t), spec.crown_thickness_mm, claims);
    }
  }
  result.labels = labels_in;
  for (std::size_t n = 0; n < claims.size(); ++n) {
    if (claims[n].source != 0) result.labels.data[n] = label;
  }
  for (const auto& p : result.layout.pontics) {
    if (p.empty()) continue;
    for (auto k = p.lo.k; k < p.hi.k; ++k)
      for (auto j = p.lo.j; j < p.hi.j; ++j)
        for (auto i = p.lo.i; i < p.hi.i; ++i) {
          auto& v = result.labels.data[static_cast<std::size_t>(g.linear(i, j, k))];
          if (v == labels::kBackground) v = label;
        }
  }
  if (std::find(result.labels.data.begin(), result.labels.data.end(), label) != result.labels.data.end()) {
    result.labels.label_names[label] = labels::name(label);
  } else {
    result.warnings.push_back("prosthesis is empty");
  }
  return result;
}

TetMesh voxels_to_tets(const LabelVolume& labels_in) {
  labels_in.validate();
  const Grid& g = labels_in.grid;
  const Index3 cd{g.dims.i + 1, g.dims.j + 1, g.dims.k + 1};
  auto corner_index = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return i + cd.i * (j + cd.j * k); };

  std::vector<std::int32_t> node_of_corner(static_cast<std::size_t>(cd.i * cd.j * cd.k), -1);
  std::size_t labeled = 0;
  for (std::int64_t n = 0; n < g.count(); ++n) {
    if (labels_in.data[static_cast<std::size_t>(n)] == 0) continue;
    ++labeled;
    const Index3 p = g.unravel(n);
    for (int c = 0; c < 8; ++c) {
      node_of_corner[static_cast<std::size_t>(corner_index(p.i + (c & 1), p.j + ((c >> 1) & 1), p.k + ((c >> 2) & 1)))] = 0;
    }
  }
  if (labeled == 0) throw Error(Errc::empty_domain, "label volume has no labeled voxels to mesh");
  if (labeled * 6 > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw Error(Errc::parameter, "mesh too large");
  }

  TetMesh mesh;
  mesh.grid = g;
  std::int32_t next = 0;
  for (std::int64_t k = 0; k < cd.k; ++k)
    for (std::int64_t j = 0; j < cd.j; ++j)
      for (std::int64_t i = 0; i < cd.i; ++i) {
        auto& id = node_of_corner[static_cast<std::size_t>(corner_index(i, j, k))];
        if (id < 0) continue;
        id = next++;
        mesh.nodes.push_back(g.corner({i, j, k}));
      }

  // Six axis orders; each walks from corner 0 to corner 7 one axis at a
  // time. Odd permutations are flipped to keep the volume positive.
  static constexpr std::array<std::array<int, 3>, 6> orders = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  static constexpr std::array<bool, 6> odd = {false, true, true, false, false, true};

  mesh.tets.reserve(labeled * 6);
  mesh.tet_labels.reserve(labeled * 6);
  mesh.tet_voxel.reserve(labeled * 6);
  for (std::int64_t n = 0; n < g.count(); ++n) {
    const auto label = labels_in.data[static_cast<std::size_t>(n)];
    if (label == 0) continue;
    const Index3 p = g.unravel(n);
    std::array<std::int32_t, 8> c{};
    for (int b = 0; b < 8; ++b) {
      c[b] = node_of_corner[static_cast<std::size_t>(corner_index(p.i + (b & 1), p.j + ((b >> 1) & 1), p.k + ((b >> 2) & 1)))];
    }
    for (std::size_t o = 0; o < orders.size(); ++o) {
      const int b1 = 1 << orders[o][0];
      const int b2 = b1 | (1 << orders[o][1]);
      std::array<std::int32_t, 4> tet{c[0], c[b1], c[b2], c[7]};
      if (odd[o]) std::swap(tet[1], tet[2]);
      mesh.tets.push_back(tet);
      mesh.tet_labels.push_back(label);
      mesh.tet_voxel.push_back(n);
    }
  }
  for (const auto& [l, name] : labels_in.label_names) {
    if (std::find(mesh.tet_labels.begin(), mesh.tet_labels.end(), l) != mesh.tet_labels.end()) {
      mesh.label_names[l] = name;
    }
  }
  mesh.boundary = extract_boundary(mesh);
  return mesh;
}

namespace {

double geometric_tolerance(const Grid& g) {
  return 1e-6 * std::min({g.spacing.x, g.spacing.y, g.spacing.z});
}

bool on_plane(const TetMesh& mesh, const BoundaryFacet& f, int axis, double coord, double tol) {
  for (auto n : f.nodes)
    if (std::abs(mesh.nodes[n][axis] - coord) > tol) return false;
  return true;
}

void tag_fixed(TetMesh& mesh, const CutFaces& faces) {
  const double tol = geometric_tolerance(mesh.grid);
  for (auto& f : mesh.boundary) {
    f.tag = BoundaryTag::free;
    f.patch = 0;
    for (int face = 0; face < 6; ++face) {
      if (faces.cut[face] && on_plane(mesh, f, face / 2, faces.plane[face], tol)) {
        f.tag = BoundaryTag::fixed;
        break;
      }
    }
  }
}

bool faces_up(const TetMesh& mesh, const BoundaryFacet& f) {
  const Vec3 n = facet_area_normal(mesh, f);
  return n.z > 0.5 * norm(n);
}

/// Tags the highest up-facing free facets whose centroid lies in the region.
std::size_t tag_top_facets(TetMesh& mesh, const LoadRegion& region) {
  const double tol = geometric_tolerance(mesh.grid);
  auto inside = [&](const Vec3& c) {
    return c.x >= region.lo.x - tol && c.x <= region.hi.x + tol && c.y >= region.lo.y - tol &&
           c.y <= region.hi.y + tol;
  };
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& f : mesh.boundary) {
    if (f.tag != BoundaryTag::free || !faces_up(mesh, f)) continue;
    const Vec3 c = facet_centroid(mesh, f);
    if (inside(c)) top = std::max(top, c.z);
  }
  std::size_t count = 0;
  for (auto& f : mesh.boundary) {
    if (f.tag != BoundaryTag::free || !faces_up(mesh, f)) continue;
    const Vec3 c = facet_centroid(mesh, f);
    if (inside(c) && c.z >= top - tol) {
      f.tag = BoundaryTag::loaded;
      f.patch = region.patch;
      ++count;
    }
  }
  return count;
}

void finish_tags(TagResult& result) {
  std::size_t fixed = 0;
  std::size_t loaded = 0;
  for (const auto& f : result.mesh.boundary) {
    fixed += f.tag == BoundaryTag::fixed;
    loaded += f.tag == BoundaryTag::loaded;
  }
  if (fixed == 0) throw Error(Errc::singular_setup, "no fixed (Gamma_2) facets: the stiffness matrix would be singular");
  if (loaded == 0) result.warnings.push_back("no loaded (Gamma_3) facets: the solution will be zero");
}

}  // namespace

TagResult tag_boundary(const TetMesh& mesh, const CutFaces& faces, const BridgeLayout& layout,
                       const ProsthesisSpec& spec) {
  TagResult result;
  result.mesh = mesh;
  tag_fixed(result.mesh, faces);

  const Grid& g = mesh.grid;
  auto footprint = [&](const VoxelBox& b, std::int32_t patch, std::string name) {
    return LoadRegion{patch, g.corner(b.lo), g.corner(b.hi), std::move(name)};
  };

  if (!layout.ordered_teeth.empty()) {
    const int first = layout.ordered_teeth.front();
    result.regions.push_back(footprint(layout.tooth_boxes.at(first), 1, "crown " + std::to_string(first)));
    if (layout.ordered_teeth.size() > 1) {
      const int last = layout.ordered_teeth.back();
      result.regions.push_back(footprint(layout.tooth_boxes.at(last), 2, "crown " + std::to_string(last)));
    }
  }
  std::int32_t patch = 3;
  for (const auto& p : layout.pontics) {
    if (p.empty()) continue;
    LoadRegion whole = footprint(p, patch, "pontic centre " + std::to_string(patch - 2));
    LoadRegion centre = whole;
    const int s = layout.span_axis;
    const double len = whole.hi[s] - whole.lo[s];
    centre.lo[s] = whole.lo[s] + 0.5 * (1.0 - spec.load_center_fraction) * len;
    centre.hi[s] = whole.lo[s] + 0.5 * (1.0 + spec.load_center_fraction) * len;
    result.regions.push_back(centre);
    ++patch;
  }

  for (auto& region : result.regions) {
    if (tag_top_facets(result.mesh, region) > 0) continue;
    if (region.patch >= 3) {
      // Centre band narrower than a voxel: fall back to the whole pontic.
      const auto& p = layout.pontics[static_cast<std::size_t>(region.patch - 3)];
      region.lo = g.corner(p.lo);
      region.hi = g.corner(p.hi);
      if (tag_top_facets(result.mesh, region) > 0) continue;
    }
    result.warnings.push_back("load patch " + std::to_string(region.patch) + " (" + region.name + ") has no facets");
  }
  finish_tags(result);
  return result;
}

TagResult tag_box_faces(const TetMesh& mesh, const std::vector<BoxFace>& fixed, const std::vector<BoxFace>& loaded) {
  TagResult result;
  result.mesh = mesh;
  CutFaces faces;
  faces.plane = grid_face_planes(mesh.grid);
  for (auto f : fixed) faces.cut[static_cast<std::size_t>(f)] = true;
  tag_fixed(result.mesh, faces);

  const double tol = geometric_tolerance(mesh.grid);
  std::int32_t patch = 1;
  for (auto face : loaded) {
    const auto idx = static_cast<std::size_t>(face);
    for (auto& f : result.mesh.boundary) {
      if (f.tag == BoundaryTag::free && on_plane(result.mesh, f, static_cast<int>(idx / 2), faces.plane[idx], tol)) {
        f.tag = BoundaryTag::loaded;
        f.patch = patch;
      }
    }
    result.regions.push_back({patch, {}, {}, "face " + std::string(face_name(face))});
    ++patch;
  }
  finish_tags(result);
  return result;
}

}  // namespace dental
