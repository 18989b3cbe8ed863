#pragma once

// Synthetic volumes, meshes and materials shared by the unit and acceptance
// tests.

#include <cstdint>
#include <random>
#include <vector>

#include "dental/elasticity.hpp"
#include "dental/geometry.hpp"
#include "dental/segmentation.hpp"
#include "dental/volume.hpp"

namespace fixtures {

using namespace dental;

Grid grid(Index3 dims, double h = 1.0, Vec3 origin = {});

/// Every voxel carries `label`, named canonically.
LabelVolume box_labels(Index3 dims, double h, std::uint32_t label = labels::kJaw);

/// Bar along z of nx x ny x nz voxels; z-lo clamped, z-hi loaded (patch 1).
TetMesh bar_mesh(Index3 dims, double h);

/// Two segments along z: the lower `split` layers are Jaw, the rest Tooth_11.
TetMesh series_bar_mesh(Index3 dims, double h, std::int64_t split);

MaterialTable uniform_materials(double E, double nu);

/// Materials for the dental labels: Jaw, Tooth, PDL, Prosthesis, plus PDL
/// presets for mobility degrees 0..3.
MaterialTable dental_materials(double e_bone = 13700.0, double e_pdl = 137.0, double nu_pdl = 0.45);

/// Uniform normal pressure on every loaded facet.
LoadSpec pressure(double p);

/// Random label volume; each voxel is nonzero with probability `fill`.
LabelVolume random_labels(std::mt19937_64& rng, Index3 dims, double fill, std::uint32_t max_label = 3);

ScalarVolume random_volume(std::mt19937_64& rng, Index3 dims, double lo, double hi, VoxelType storage);

/// Cylindrical tooth (Tooth_11) standing in a bone block with a PDL shell.
struct Phantom {
  LabelVolume labels;
  CutFaces faces;
  BridgeLayout layout;
  ProsthesisSpec spec;
};
Phantom tooth_in_bone(Index3 dims, double h, double radius_vox, std::int64_t bone_top, std::int64_t root_bottom,
                      double pdl_mm);

/// CT-like intensities: bone 1000, two teeth (14, 16) 2000, air -1000,
/// with the teeth far enough apart that one plane cut isolates them.
struct SyntheticCt {
  ScalarVolume volume;
  MarkerSet markers;
  std::vector<ToothCut> cuts;
  std::vector<ToothSeed> seeds;
  double threshold = 500.0;
};
SyntheticCt two_tooth_ct();

}  // namespace fixtures
