#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dental/mesh.hpp"
#include "dental/volume.hpp"

namespace dental {

struct ToothSettings {
  int mobility_degree = 0;  // 0..3
  double pdl_thickness_mm = 0.3;

  friend bool operator==(const ToothSettings&, const ToothSettings&) = default;
};

/// One prosthesis design variant.
struct ProsthesisSpec {
  int index = 1;  // Prosthesis_<index>
  std::vector<int> supporting_teeth;
  double crown_thickness_mm = 0.5;
  std::vector<int> pontic_teeth;  // missing teeth the bridge replaces; informational
  std::map<int, ToothSettings> teeth;
  /// Height of each pontic prism; 0 derives one third of the shorter
  /// neighbouring tooth.
  double pontic_height_mm = 0.0;
  /// Fraction of each pontic span (centred) whose top facets form a load patch.
  double load_center_fraction = 1.0 / 3.0;
  /// Allowed spread of crown heights before a warning is recorded.
  double coplanar_tolerance_mm = 1.0;

  ToothSettings settings(int tooth) const;

  /// Throws Errc::parameter on violated invariants. A bridge needs at least
  /// two supporting teeth; a single crown needs one.
  void validate(bool bridge) const;

  friend bool operator==(const ProsthesisSpec&, const ProsthesisSpec&) = default;
};

enum class BoxFace { x_lo = 0, x_hi, y_lo, y_hi, z_lo, z_hi };

std::string_view face_name(BoxFace f);
std::optional<BoxFace> parse_face(std::string_view name);

/// Faces of the fragment box where the jaw was severed, with the plane
/// coordinate (mm) of each face along its axis.
struct CutFaces {
  std::array<bool, 6> cut{};
  std::array<double, 6> plane{};

  bool any() const;
  friend bool operator==(const CutFaces&, const CutFaces&) = default;
};

/// Plane coordinates of the six outer faces of a grid.
std::array<double, 6> grid_face_planes(const Grid& grid);

/// Faces of the volume box whose outermost voxel layer contains `label`.
CutFaces faces_touching(const LabelVolume& labels, std::uint32_t label);

/// Half-open voxel box.
struct VoxelBox {
  Index3 lo;
  Index3 hi;

  bool empty() const { return hi.i <= lo.i || hi.j <= lo.j || hi.k <= lo.k; }
  friend bool operator==(const VoxelBox&, const VoxelBox&) = default;
};

VoxelBox label_bounding_box(const LabelVolume& labels, std::uint32_t label);

struct FragmentResult {
  LabelVolume labels;
  RegionOfInterest roi;
  CutFaces faces;
  double root_length_mm = 0.0;
  double margin_mm = 0.0;
  std::vector<std::string> warnings;
};

/// Crops to the supporting teeth's bounding box grown by
/// margin_factor x root length on every side (clamped to the volume). Root
/// length is the largest vertical extent of a supporting tooth; the crown
/// plane is the top of its bounding box.
FragmentResult select_fragment(const LabelVolume& labels, const ProsthesisSpec& spec, double margin_factor);

/// Relabels teeth (and their PDL) that do not support the prosthesis as
/// background.
LabelVolume keep_supporting_teeth(const LabelVolume& labels, const ProsthesisSpec& spec);

/// Every Jaw voxel whose center lies within thickness[t] of a voxel of tooth
/// t becomes PDL_t; the nearest tooth wins, then the lower tooth number.
LabelVolume generate_pdl(const LabelVolume& labels, const std::map<int, double>& thickness_mm);

struct BridgeLayout {
  int span_axis = 0;        // horizontal axis along the dental arch
  int transverse_axis = 1;  // the other horizontal axis
  std::vector<int> ordered_teeth;
  std::map<int, VoxelBox> tooth_boxes;
  std::vector<VoxelBox> pontics;  // one per consecutive pair; may be empty
  std::vector<std::string> warnings;
};

BridgeLayout layout_bridge(const LabelVolume& labels, const ProsthesisSpec& spec);

struct BridgeResult {
  LabelVolume labels;
  BridgeLayout layout;
  std::vector<std::string> warnings;
};

/// Adds Prosthesis_<index>: background voxels within crown_thickness of each
/// supporting tooth (crown shells) plus the pontic prisms. Never overwrites
/// non-background voxels.
BridgeResult build_bridge(const LabelVolume& labels, const ProsthesisSpec& spec);

/// Freudenthal subdivision: every labeled voxel becomes 6 tets around the
/// (0,0,0)-(1,1,1) diagonal. Nodes are voxel corners numbered in corner scan
/// order; boundary facets are extracted and tagged free.
TetMesh voxels_to_tets(const LabelVolume& labels);

/// A footprint in the horizontal plane whose top-facing boundary facets get
/// a load patch id.
struct LoadRegion {
  std::int32_t patch = 0;
  Vec3 lo;  // mm; only the horizontal components are used
  Vec3 hi;
  std::string name;
};

struct TagResult {
  TetMesh mesh;
  std::vector<LoadRegion> regions;
  std::vector<std::string> warnings;
};

/// Gamma_2 on the recorded cut planes, Gamma_3 on the occlusal facets of the
/// two outermost supporting crowns (patches 1, 2) and on the centre of every
/// pontic (patches 3..), Gamma_1 elsewhere.
TagResult tag_boundary(const TetMesh& mesh, const CutFaces& faces, const BridgeLayout& layout,
                       const ProsthesisSpec& spec);

/// Fixture tagging: facets on the listed outer grid faces become fixed or
/// loaded (one patch per loaded face, ids 1.. in list order).
TagResult tag_box_faces(const TetMesh& mesh, const std::vector<BoxFace>& fixed, const std::vector<BoxFace>& loaded);

}  // namespace dental
