#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dental/error.hpp"
#include "dental/vec.hpp"

namespace dental {

/// On-disk voxel encodings understood by the NIfTI reader/writer. Values are
/// the NIfTI-1 datatype codes.
enum class VoxelType : std::int16_t {
  uint8 = 2,
  int16 = 4,
  int32 = 8,
  float32 = 16,
  int8 = 256,
  uint16 = 512,
};

bool is_integer(VoxelType t) noexcept;
int bits_per_voxel(VoxelType t) noexcept;

/// Axis-aligned voxel grid. Voxel (i,j,k) has its center at
/// origin + (i,j,k) * spacing; corners sit half a voxel away.
struct Grid {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::int64_t count() const { return dims.i * dims.j * dims.k; }

  std::int64_t linear(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i + dims.i * (j + dims.j * k);
  }
  std::int64_t linear(const Index3& v) const { return linear(v.i, v.j, v.k); }

  Index3 unravel(std::int64_t n) const {
    return {n % dims.i, (n / dims.i) % dims.j, n / (dims.i * dims.j)};
  }

  bool contains(const Index3& v) const {
    return v.i >= 0 && v.j >= 0 && v.k >= 0 && v.i < dims.i && v.j < dims.j && v.k < dims.k;
  }

  Vec3 center(const Index3& v) const {
    return {origin.x + static_cast<double>(v.i) * spacing.x,
            origin.y + static_cast<double>(v.j) * spacing.y,
            origin.z + static_cast<double>(v.k) * spacing.z};
  }

  /// Lower corner of voxel v; corner(dims) is the far corner of the grid.
  Vec3 corner(const Index3& v) const {
    return {origin.x + (static_cast<double>(v.i) - 0.5) * spacing.x,
            origin.y + (static_cast<double>(v.j) - 0.5) * spacing.y,
            origin.z + (static_cast<double>(v.k) - 0.5) * spacing.z};
  }

  double voxel_volume() const { return spacing.x * spacing.y * spacing.z; }

  /// Throws Errc::dimension when dims < 1 or spacing <= 0.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct ScalarVolume {
  Grid grid;
  std::vector<double> data;  // x-fastest
  VoxelType storage = VoxelType::int16;

  double& at(const Index3& v) { return data[static_cast<std::size_t>(grid.linear(v))]; }
  double at(const Index3& v) const { return data[static_cast<std::size_t>(grid.linear(v))]; }

  void validate() const;

  friend bool operator==(const ScalarVolume&, const ScalarVolume&) = default;
};

struct LabelVolume {
  Grid grid;
  std::vector<std::uint32_t> data;  // x-fastest, 0 = background
  std::map<std::uint32_t, std::string> label_names;
  /// Preferred on-disk type; the narrowest sufficient type is used when empty.
  std::optional<VoxelType> storage;

  std::uint32_t& at(const Index3& v) { return data[static_cast<std::size_t>(grid.linear(v))]; }
  std::uint32_t at(const Index3& v) const { return data[static_cast<std::size_t>(grid.linear(v))]; }

  std::uint32_t max_label() const;

  /// Grid invariants plus: every nonzero label in data is named.
  void validate() const;

  friend bool operator==(const LabelVolume&, const LabelVolume&) = default;
};

ScalarVolume make_scalar_volume(const Grid& grid, double fill = 0.0);
LabelVolume make_label_volume(const Grid& grid, std::uint32_t fill = 0);

/// Half-open voxel box [lo, hi).
struct RegionOfInterest {
  Index3 lo;
  Index3 hi;

  Index3 extent() const { return {hi.i - lo.i, hi.j - lo.j, hi.k - lo.k}; }
  friend bool operator==(const RegionOfInterest&, const RegionOfInterest&) = default;
};

Grid crop_grid(const Grid& grid, const RegionOfInterest& roi);
ScalarVolume crop(const ScalarVolume& volume, const RegionOfInterest& roi);
LabelVolume crop(const LabelVolume& volume, const RegionOfInterest& roi);

struct Histogram {
  std::vector<double> bin_edges;  // nbins + 1 entries
  std::vector<std::int64_t> counts;
};

Histogram histogram(const ScalarVolume& volume, int nbins);

enum class Axis { x = 0, y = 1, z = 2 };

std::optional<Axis> parse_axis(std::string_view name);

/// Row-major 2D plane. For an x-slice the plane spans (y, z), for y (x, z)
/// and for z (x, y); the first remaining axis runs fastest.
template <class T>
struct Plane {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<T> data;

  T at(std::int64_t u, std::int64_t v) const { return data[static_cast<std::size_t>(u + width * v)]; }
  friend bool operator==(const Plane&, const Plane&) = default;
};

Plane<double> extract_slice(const ScalarVolume& volume, Axis axis, std::int64_t index);
Plane<std::uint32_t> extract_slice(const LabelVolume& volume, Axis axis, std::int64_t index);

}  // namespace dental
