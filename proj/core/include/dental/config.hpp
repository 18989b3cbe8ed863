#pragma once

// JSON documents shared by the command line driver and the case service.
// Parsers throw Errc::format for malformed JSON and Errc::parameter for
// fields of the wrong type or out of range.

#include <string>
#include <string_view>
#include <vector>

#include "dental/elasticity.hpp"
#include "dental/geometry.hpp"
#include "dental/segmentation.hpp"

namespace dental {

struct CutSet {
  std::vector<ToothCut> cuts;
  std::vector<ToothSeed> seeds;

  friend bool operator==(const CutSet&, const CutSet&) = default;
};

/// Fixture boundary: clamp and load whole faces of the label grid instead
/// of the dental cut-plane / occlusal tagging.
struct BoxBoundary {
  std::vector<BoxFace> fixed;
  std::vector<BoxFace> loaded;

  friend bool operator==(const BoxBoundary&, const BoxBoundary&) = default;
};

/// {"threshold": 300, "connectivity": 6, "flood_surface": "gradient_magnitude"}
SegmentationParams parse_segmentation_params(std::string_view json);
std::string to_json(const SegmentationParams& params);

/// {"markers": [{"voxel": [i, j, k], "id": 1}], "roles": {"1": "internal"}}
MarkerSet parse_markers(std::string_view json);
std::string to_json(const MarkerSet& markers);

/// {"cuts": [{"point": [x, y, z], "normal": [nx, ny, nz]}],
///  "seeds": [{"voxel": [i, j, k], "tooth": 14}]}
CutSet parse_cuts(std::string_view json);
std::string to_json(const CutSet& cuts);

/// {"index": 1, "supporting_teeth": [14, 16], "crown_thickness_mm": 0.5,
///  "pontic_teeth": [15], "pontic_height_mm": 0, "load_center_fraction": 0.333,
///  "coplanar_tolerance_mm": 1.0,
///  "teeth": {"14": {"mobility_degree": 1, "pdl_thickness_mm": 0.3}}}
ProsthesisSpec parse_prosthesis(std::string_view json);
std::string to_json(const ProsthesisSpec& spec);

/// {"subdomains": {"Jaw": {"E": 13700, "nu": 0.3}, "Tooth_14": {...}},
///  "pdl_mobility": {"0": {"E": 50, "nu": 0.45}, ...}}
MaterialTable parse_materials(std::string_view json);
std::string to_json(const MaterialTable& table);

/// {"default": {"mode": "normal_pressure", "magnitude": 100} | null,
///  "patches": {"3": {"mode": "fixed_vector", "magnitude": 50,
///                    "direction": [0, 0, -1]}}}
LoadSpec parse_loads(std::string_view json);
std::string to_json(const LoadSpec& loads);

/// {"rel_tol": 1e-8, "max_iter": 0}
CgParams parse_solver(std::string_view json);
std::string to_json(const CgParams& params);

/// {"fixed_faces": ["z-"], "loaded_faces": ["z+"]}
BoxBoundary parse_boundary(std::string_view json);
std::string to_json(const BoxBoundary& boundary);

/// {"teeth": [{"tooth": 14, "max_displacement": ..., "max_von_mises": ...,
///  "elements": ...}], "warnings": [...]}
std::string to_json(const MaximaTable& table);
std::string to_json(const SolverReport& report, bool with_history = false);

}  // namespace dental
