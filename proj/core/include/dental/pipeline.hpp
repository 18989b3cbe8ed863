#pragma once

// The segment -> mesh -> solve chain shared by the command line driver and
// the case service, so both produce the same artifacts from the same inputs.

#include <optional>
#include <string>
#include <vector>

#include "dental/config.hpp"
#include "dental/elasticity.hpp"
#include "dental/geometry.hpp"
#include "dental/segmentation.hpp"

namespace dental {

struct SegmentationInputs {
  SegmentationParams params;
  MarkerSet markers;
  CutSet cuts;
};

/// threshold -> flood surface -> marker watershed -> Jaw/Dentition ->
/// tooth cuts (skipped when no cuts and no seeds are given).
LabelVolume run_segmentation(const ScalarVolume& volume, const SegmentationInputs& inputs);

struct MeshingInputs {
  ProsthesisSpec prosthesis;
  double margin_factor = 1.5;
  /// Set for fixtures: skips fragment, PDL and bridge construction and tags
  /// whole grid faces.
  std::optional<BoxBoundary> boundary;
};

struct MeshingOutput {
  LabelVolume labels;  // final labels the mesh was built from
  TetMesh mesh;
  std::vector<LoadRegion> regions;
  MeshAudit audit;
  std::vector<std::string> warnings;
};

MeshingOutput run_meshing(const LabelVolume& labels, const MeshingInputs& inputs);

/// Copies the per-tooth mobility degrees of the prosthesis into the table.
MaterialTable with_mobility(MaterialTable table, const ProsthesisSpec& spec);

struct SolveOutput {
  StaticResult result;
  MaximaTable maxima;
};

SolveOutput run_solve(const TetMesh& mesh, const MaterialTable& materials, const LoadSpec& loads,
                      const CgParams& solver);

/// Report document written next to a solution: maxima, solver report, load
/// summary and field ranges.
std::string results_json(const SolveOutput& out);

}  // namespace dental
