#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dental/volume.hpp"

namespace dental {

enum class Connectivity { six = 6, twenty_six = 26 };

enum class FloodSurface { gradient_magnitude, raw_intensity };

enum class MarkerRole { internal, external };

struct Marker {
  Index3 voxel;
  std::uint32_t id = 0;

  friend bool operator==(const Marker&, const Marker&) = default;
};

/// User-placed seeds. Voxels sharing an id form one marker; internal markers
/// grow the Dentition, external ones the Jaw.
struct MarkerSet {
  std::vector<Marker> markers;
  std::map<std::uint32_t, MarkerRole> roles;

  friend bool operator==(const MarkerSet&, const MarkerSet&) = default;
};

struct SegmentationParams {
  double threshold = 0.0;
  Connectivity connectivity = Connectivity::six;
  FloodSurface flood_surface = FloodSurface::gradient_magnitude;

  friend bool operator==(const SegmentationParams&, const SegmentationParams&) = default;
};

/// Cut plane through the Dentition; voxels are split by the sign of
/// dot(center - point, normal).
struct ToothCut {
  Vec3 point;
  Vec3 normal{0.0, 0.0, 1.0};

  friend bool operator==(const ToothCut&, const ToothCut&) = default;
};

/// Names the piece of the cut Dentition containing `voxel`.
struct ToothSeed {
  Index3 voxel;
  int tooth = 0;

  friend bool operator==(const ToothSeed&, const ToothSeed&) = default;
};

/// Voxel-wise `value >= T` mask, label 1 = foreground.
LabelVolume threshold(const ScalarVolume& volume, double T);

/// Central differences (one-sided on the faces) scaled by the spacing.
/// Requires at least two voxels along every axis.
ScalarVolume gradient_magnitude(const ScalarVolume& volume);

/// Offsets of the 6 or 26 neighbours, in a fixed order.
const std::vector<Index3>& neighbour_offsets(Connectivity c);

/// Checks that can run before a threshold exists: every marker voxel inside
/// the grid, no voxel claimed by two ids.
void check_marker_bounds(const Grid& grid, const MarkerSet& markers);

/// Marker-controlled priority flood (Meyer). Marker voxels are queued in
/// input order with their own surface value; the lowest (value, insertion
/// order) entry is popped and labels its unlabeled foreground neighbours,
/// which are queued in turn. Output labels are marker ids; background and
/// foreground unreachable from any marker stay 0.
LabelVolume watershed_markers(const ScalarVolume& surface, const LabelVolume& mask, const MarkerSet& markers,
                              Connectivity connectivity = Connectivity::six);

/// Components of the nonzero voxels, numbered 1.. in scan order of their
/// first voxel.
LabelVolume connected_components(const LabelVolume& mask, Connectivity connectivity = Connectivity::six);

/// Watershed regions of internal markers become Dentition, external ones Jaw.
LabelVolume classify_regions(const LabelVolume& watershed, const MarkerSet& markers);

/// Splits the Dentition label with the cut planes and relabels every piece
/// (a 6-connected set of Dentition voxels on the same side of every plane)
/// as the Tooth_XX named by the seed that falls inside it.
LabelVolume cut_dentition(const LabelVolume& labels, const std::vector<ToothCut>& cuts,
                          const std::vector<ToothSeed>& seeds);

}  // namespace dental
