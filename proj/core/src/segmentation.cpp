#include "dental/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>

#include "dental/labels.hpp"

namespace dental {

LabelVolume threshold(const ScalarVolume& volume, double T) {
  volume.validate();
  LabelVolume mask = make_label_volume(volume.grid);
  for (std::size_t n = 0; n < volume.data.size(); ++n) mask.data[n] = volume.data[n] >= T ? 1u : 0u;
  mask.label_names[1] = "Foreground";
  return mask;
}

ScalarVolume gradient_magnitude(const ScalarVolume& volume) {
  volume.validate();
  const Grid& g = volume.grid;
  if (g.dims.i < 2 || g.dims.j < 2 || g.dims.k < 2) {
    throw Error(Errc::dimension, "gradient needs at least 2 voxels along each axis");
  }
  ScalarVolume out = make_scalar_volume(g);
  out.storage = VoxelType::float32;
  for (std::int64_t k = 0; k < g.dims.k; ++k)
    for (std::int64_t j = 0; j < g.dims.j; ++j)
      for (std::int64_t i = 0; i < g.dims.i; ++i) {
        const Index3 p{i, j, k};
        double sum = 0.0;
        for (int a = 0; a < 3; ++a) {
          Index3 lo = p;
          Index3 hi = p;
          if (p[a] > 0) --lo[a];
          if (p[a] < g.dims[a] - 1) ++hi[a];
          const double d = (volume.at(hi) - volume.at(lo)) / (static_cast<double>(hi[a] - lo[a]) * g.spacing[a]);
          sum += d * d;
        }
        out.at(p) = std::sqrt(sum);
      }
  return out;
}

const std::vector<Index3>& neighbour_offsets(Connectivity c) {
  static const std::vector<Index3> six = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  static const std::vector<Index3> twenty_six = [] {
    std::vector<Index3> v;
    for (int k = -1; k <= 1; ++k)
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i)
          if (i != 0 || j != 0 || k != 0) v.push_back({i, j, k});
    return v;
  }();
  return c == Connectivity::six ? six : twenty_six;
}

namespace {

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw Error(Errc::dimension, std::string(what) + " must share a grid");
}

struct FloodEntry {
  double value;
  std::uint64_t order;
  std::int64_t voxel;

  bool operator>(const FloodEntry& o) const {
    return value != o.value ? value > o.value : order > o.order;
  }
};

}  // namespace

void check_marker_bounds(const Grid& grid, const MarkerSet& markers) {
  std::map<std::int64_t, std::uint32_t> seen;
  for (const auto& m : markers.markers) {
    if (!grid.contains(m.voxel)) throw Error(Errc::placement, "marker voxel outside the volume");
    auto [it, fresh] = seen.emplace(grid.linear(m.voxel), m.id);
    if (!fresh && it->second != m.id) throw Error(Errc::placement, "two markers claim the same voxel");
  }
}

LabelVolume watershed_markers(const ScalarVolume& surface, const LabelVolume& mask, const MarkerSet& markers,
                              Connectivity connectivity) {
  surface.validate();
  mask.validate();
  require_same_grid(surface.grid, mask.grid, "flood surface and mask");

  bool has_internal = false;
  bool has_external = false;
  for (const auto& m : markers.markers) {
    const auto role = markers.roles.find(m.id);
    if (m.id == 0 || role == markers.roles.end()) {
      throw Error(Errc::marker, "marker id " + std::to_string(m.id) + " has no role");
    }
    (role->second == MarkerRole::internal ? has_internal : has_external) = true;
  }
  if (!has_internal || !has_external) {
    throw Error(Errc::marker, "watershed needs at least one internal and one external marker");
  }

  const Grid& g = mask.grid;
  LabelVolume out = make_label_volume(g);
  std::priority_queue<FloodEntry, std::vector<FloodEntry>, std::greater<>> queue;
  std::uint64_t order = 0;

  for (const auto& m : markers.markers) {
    if (!g.contains(m.voxel)) throw Error(Errc::placement, "marker voxel outside the volume");
    const auto n = g.linear(m.voxel);
    if (mask.data[static_cast<std::size_t>(n)] == 0) throw Error(Errc::placement, "marker placed on background");
    auto& label = out.data[static_cast<std::size_t>(n)];
    if (label != 0 && label != m.id) throw Error(Errc::placement, "two markers claim the same voxel");
    if (label == m.id) continue;
    label = m.id;
    queue.push({surface.data[static_cast<std::size_t>(n)], order++, n});
  }

  const auto& offsets = neighbour_offsets(connectivity);
  while (!queue.empty()) {
    const FloodEntry top = queue.top();
    queue.pop();
    const Index3 p = g.unravel(top.voxel);
    const std::uint32_t label = out.data[static_cast<std::size_t>(top.voxel)];
    for (const auto& d : offsets) {
      const Index3 q{p.i + d.i, p.j + d.j, p.k + d.k};
      if (!g.contains(q)) continue;
      const auto n = static_cast<std::size_t>(g.linear(q));
      if (mask.data[n] == 0 || out.data[n] != 0) continue;
      out.data[n] = label;
      queue.push({surface.data[n], order++, static_cast<std::int64_t>(n)});
    }
  }

  for (const auto& [id, role] : markers.roles) {
    out.label_names[id] = std::string(role == MarkerRole::internal ? "Internal_" : "External_") + std::to_string(id);
  }
  return out;
}

LabelVolume connected_components(const LabelVolume& mask, Connectivity connectivity) {
  mask.validate();
  const Grid& g = mask.grid;
  LabelVolume out = make_label_volume(g);
  const auto& offsets = neighbour_offsets(connectivity);
  std::uint32_t next = 0;
  std::vector<std::int64_t> stack;
  for (std::int64_t start = 0; start < g.count(); ++start) {
    if (mask.data[static_cast<std::size_t>(start)] == 0 || out.data[static_cast<std::size_t>(start)] != 0) continue;
    const std::uint32_t label = ++next;
    out.data[static_cast<std::size_t>(start)] = label;
    stack.assign(1, start);
    while (!stack.empty()) {
      const Index3 p = g.unravel(stack.back());
      stack.pop_back();
      for (const auto& d : offsets) {
        const Index3 q{p.i + d.i, p.j + d.j, p.k + d.k};
        if (!g.contains(q)) continue;
        const auto n = g.linear(q);
        auto& dst = out.data[static_cast<std::size_t>(n)];
        if (mask.data[static_cast<std::size_t>(n)] == 0 || dst != 0) continue;
        dst = label;
        stack.push_back(n);
      }
    }
    out.label_names[label] = "Component_" + std::to_string(label);
  }
  return out;
}

LabelVolume classify_regions(const LabelVolume& watershed, const MarkerSet& markers) {
  watershed.validate();
  LabelVolume out = make_label_volume(watershed.grid);
  for (std::size_t n = 0; n < watershed.data.size(); ++n) {
    const auto id = watershed.data[n];
    if (id == 0) continue;
    const auto role = markers.roles.find(id);
    if (role == markers.roles.end()) throw Error(Errc::marker, "region " + std::to_string(id) + " has no marker role");
    out.data[n] = role->second == MarkerRole::internal ? labels::kDentition : labels::kJaw;
  }
  out.label_names[labels::kJaw] = labels::name(labels::kJaw);
  out.label_names[labels::kDentition] = labels::name(labels::kDentition);
  return out;
}

LabelVolume cut_dentition(const LabelVolume& labels_in, const std::vector<ToothCut>& cuts,
                          const std::vector<ToothSeed>& seeds) {
  labels_in.validate();
  if (cuts.size() > 64) throw Error(Errc::parameter, "at most 64 cut planes are supported");
  for (const auto& c : cuts) {
    if (std::abs(norm(c.normal) - 1.0) > 1e-9) throw Error(Errc::parameter, "cut normal must have unit length");
  }
  const Grid& g = labels_in.grid;
  const auto count = static_cast<std::size_t>(g.count());

  std::vector<std::uint64_t> side(count, 0);
  bool any_dentition = false;
  for (std::size_t n = 0; n < count; ++n) {
    if (labels_in.data[n] != labels::kDentition) continue;
    any_dentition = true;
    const Vec3 c = g.center(g.unravel(static_cast<std::int64_t>(n)));
    for (std::size_t p = 0; p < cuts.size(); ++p) {
      if (dot(c - cuts[p].point, cuts[p].normal) >= 0.0) side[n] |= std::uint64_t{1} << p;
    }
  }
  if (!any_dentition) throw Error(Errc::reference, "label volume contains no Dentition");

  // Pieces: 6-connected Dentition voxels with identical side codes.
  std::vector<std::int32_t> piece(count, -1);
  std::int32_t pieces = 0;
  std::vector<std::int64_t> stack;
  for (std::size_t start = 0; start < count; ++start) {
    if (labels_in.data[start] != labels::kDentition || piece[start] >= 0) continue;
    piece[start] = pieces;
    stack.assign(1, static_cast<std::int64_t>(start));
    while (!stack.empty()) {
      const Index3 p = g.unravel(stack.back());
      stack.pop_back();
      for (const auto& d : neighbour_offsets(Connectivity::six)) {
        const Index3 q{p.i + d.i, p.j + d.j, p.k + d.k};
        if (!g.contains(q)) continue;
        const auto n = static_cast<std::size_t>(g.linear(q));
        if (labels_in.data[n] != labels::kDentition || piece[n] >= 0 || side[n] != side[start]) continue;
        piece[n] = pieces;
        stack.push_back(static_cast<std::int64_t>(n));
      }
    }
    ++pieces;
  }

  std::vector<int> tooth_of_piece(static_cast<std::size_t>(pieces), 0);
  std::map<int, std::int32_t> piece_of_tooth;
  for (const auto& s : seeds) {
    if (!g.contains(s.voxel) || labels_in.at(s.voxel) != labels::kDentition) {
      throw Error(Errc::placement, "tooth seed for " + std::to_string(s.tooth) + " is not on the Dentition");
    }
    labels::tooth(s.tooth);  // validates the number
    const auto p = piece[static_cast<std::size_t>(g.linear(s.voxel))];
    auto& assigned = tooth_of_piece[static_cast<std::size_t>(p)];
    if (assigned != 0 && assigned != s.tooth) {
      throw Error(Errc::ambiguity, "one piece assigned both tooth " + std::to_string(assigned) + " and " +
                                       std::to_string(s.tooth));
    }
    const auto [it, inserted] = piece_of_tooth.emplace(s.tooth, p);
    if (!inserted && it->second != p) {
      throw Error(Errc::ambiguity, "tooth " + std::to_string(s.tooth) + " assigned to two disjoint pieces");
    }
    assigned = s.tooth;
  }
  for (std::int32_t p = 0; p < pieces; ++p) {
    if (tooth_of_piece[static_cast<std::size_t>(p)] == 0) {
      throw Error(Errc::incomplete_assignment,
                  "dentition piece " + std::to_string(p + 1) + " of " + std::to_string(pieces) + " has no tooth id");
    }
  }

  LabelVolume out = labels_in;
  out.label_names.erase(labels::kDentition);
  for (std::size_t n = 0; n < count; ++n) {
    if (piece[n] < 0) continue;
    const auto t = labels::tooth(tooth_of_piece[static_cast<std::size_t>(piece[n])]);
    out.data[n] = t;
    out.label_names[t] = labels::name(t);
  }
  return out;
}

}  // namespace dental
