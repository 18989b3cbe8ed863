#include "dental/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dental {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::format: return "format";
    case Errc::unsupported_type: return "unsupported_type";
    case Errc::truncation: return "truncation";
    case Errc::bounds: return "bounds";
    case Errc::empty_input: return "empty_input";
    case Errc::dimension: return "dimension";
    case Errc::marker: return "marker";
    case Errc::placement: return "placement";
    case Errc::ambiguity: return "ambiguity";
    case Errc::incomplete_assignment: return "incomplete_assignment";
    case Errc::parameter: return "parameter";
    case Errc::reference: return "reference";
    case Errc::empty_domain: return "empty_domain";
    case Errc::singular_setup: return "singular_setup";
    case Errc::element: return "element";
    case Errc::configuration: return "configuration";
    case Errc::near_incompressible: return "near_incompressible";
    case Errc::non_convergence: return "non_convergence";
    case Errc::setup: return "setup";
    case Errc::sequencing: return "sequencing";
    case Errc::busy: return "busy";
    case Errc::io: return "io";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

bool is_integer(VoxelType t) noexcept { return t != VoxelType::float32; }

int bits_per_voxel(VoxelType t) noexcept {
  switch (t) {
    case VoxelType::uint8:
    case VoxelType::int8: return 8;
    case VoxelType::int16:
    case VoxelType::uint16: return 16;
    case VoxelType::int32:
    case VoxelType::float32: return 32;
  }
  return 0;
}

void Grid::validate() const {
  if (dims.i < 1 || dims.j < 1 || dims.k < 1) {
    throw Error(Errc::dimension, "grid dimensions must be >= 1");
  }
  if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0)) {
    throw Error(Errc::dimension, "grid spacing must be positive");
  }
}

void ScalarVolume::validate() const {
  grid.validate();
  if (static_cast<std::int64_t>(data.size()) != grid.count()) {
    throw Error(Errc::dimension, "voxel count does not match grid dimensions");
  }
}

std::uint32_t LabelVolume::max_label() const {
  return data.empty() ? 0u : *std::max_element(data.begin(), data.end());
}

void LabelVolume::validate() const {
  grid.validate();
  if (static_cast<std::int64_t>(data.size()) != grid.count()) {
    throw Error(Errc::dimension, "voxel count does not match grid dimensions");
  }
  std::vector<bool> seen(max_label() + 1, false);
  for (auto label : data) seen[label] = true;
  for (std::uint32_t label = 1; label < seen.size(); ++label) {
    if (seen[label] && !label_names.contains(label)) {
      throw Error(Errc::reference, "label " + std::to_string(label) + " has no name");
    }
  }
}

ScalarVolume make_scalar_volume(const Grid& grid, double fill) {
  grid.validate();
  return {grid, std::vector<double>(static_cast<std::size_t>(grid.count()), fill), VoxelType::int16};
}

LabelVolume make_label_volume(const Grid& grid, std::uint32_t fill) {
  grid.validate();
  LabelVolume out;
  out.grid = grid;
  out.data.assign(static_cast<std::size_t>(grid.count()), fill);
  return out;
}

namespace {

void check_roi(const Grid& grid, const RegionOfInterest& roi) {
  for (int a = 0; a < 3; ++a) {
    if (roi.lo[a] < 0 || roi.lo[a] >= roi.hi[a] || roi.hi[a] > grid.dims[a]) {
      std::ostringstream msg;
      msg << "region of interest [" << roi.lo.i << "," << roi.lo.j << "," << roi.lo.k << ")-["
          << roi.hi.i << "," << roi.hi.j << "," << roi.hi.k << ") outside volume";
      throw Error(Errc::bounds, msg.str());
    }
  }
}

template <class T>
std::vector<T> crop_data(const Grid& grid, const std::vector<T>& data, const RegionOfInterest& roi) {
  const Index3 ext = roi.extent();
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(ext.i * ext.j * ext.k));
  for (auto k = roi.lo.k; k < roi.hi.k; ++k)
    for (auto j = roi.lo.j; j < roi.hi.j; ++j) {
      const auto row = grid.linear(0, j, k);
      out.insert(out.end(), data.begin() + row + roi.lo.i, data.begin() + row + roi.hi.i);
    }
  return out;
}

template <class T>
Plane<T> slice_data(const Grid& grid, const std::vector<T>& data, Axis axis, std::int64_t index) {
  const int a = static_cast<int>(axis);
  if (index < 0 || index >= grid.dims[a]) {
    throw Error(Errc::bounds, "slice index " + std::to_string(index) + " out of range");
  }
  const int u_axis = a == 0 ? 1 : 0;
  const int v_axis = a == 2 ? 1 : 2;
  Plane<T> plane;
  plane.width = grid.dims[u_axis];
  plane.height = grid.dims[v_axis];
  plane.data.reserve(static_cast<std::size_t>(plane.width * plane.height));
  Index3 p;
  p[a] = index;
  for (std::int64_t v = 0; v < plane.height; ++v) {
    p[v_axis] = v;
    for (std::int64_t u = 0; u < plane.width; ++u) {
      p[u_axis] = u;
      plane.data.push_back(data[static_cast<std::size_t>(grid.linear(p))]);
    }
  }
  return plane;
}

}  // namespace

Grid crop_grid(const Grid& grid, const RegionOfInterest& roi) {
  check_roi(grid, roi);
  Grid out = grid;
  out.dims = roi.extent();
  out.origin = grid.center(roi.lo);
  return out;
}

ScalarVolume crop(const ScalarVolume& volume, const RegionOfInterest& roi) {
  ScalarVolume out;
  out.grid = crop_grid(volume.grid, roi);
  out.data = crop_data(volume.grid, volume.data, roi);
  out.storage = volume.storage;
  return out;
}

LabelVolume crop(const LabelVolume& volume, const RegionOfInterest& roi) {
  LabelVolume out;
  out.grid = crop_grid(volume.grid, roi);
  out.data = crop_data(volume.grid, volume.data, roi);
  out.label_names = volume.label_names;
  out.storage = volume.storage;
  return out;
}

Histogram histogram(const ScalarVolume& volume, int nbins) {
  if (nbins < 1) throw Error(Errc::parameter, "histogram needs at least one bin");
  if (volume.data.empty()) throw Error(Errc::empty_input, "cannot histogram an empty volume");
  const auto [lo_it, hi_it] = std::minmax_element(volume.data.begin(), volume.data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  // A constant volume gets unit-width bins so the edges stay increasing.
  const double width = hi > lo ? (hi - lo) / nbins : 1.0;

  Histogram h;
  h.bin_edges.resize(static_cast<std::size_t>(nbins) + 1);
  for (int b = 0; b <= nbins; ++b) h.bin_edges[b] = lo + width * b;
  if (hi > lo) h.bin_edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(nbins), 0);
  for (double v : volume.data) {
    auto bin = static_cast<std::int64_t>(std::floor((v - lo) / width));
    bin = std::clamp<std::int64_t>(bin, 0, nbins - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  return h;
}

std::optional<Axis> parse_axis(std::string_view name) {
  if (name == "x" || name == "X") return Axis::x;
  if (name == "y" || name == "Y") return Axis::y;
  if (name == "z" || name == "Z") return Axis::z;
  return std::nullopt;
}

Plane<double> extract_slice(const ScalarVolume& volume, Axis axis, std::int64_t index) {
  return slice_data(volume.grid, volume.data, axis, index);
}

Plane<std::uint32_t> extract_slice(const LabelVolume& volume, Axis axis, std::int64_t index) {
  return slice_data(volume.grid, volume.data, axis, index);
}

}  // namespace dental
