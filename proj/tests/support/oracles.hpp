#pragma once

// Reference implementations the tests compare the library against. They are
// written from the definitions, not from the library code, and favour
// obviousness over speed.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dental/elasticity.hpp"
#include "dental/mesh.hpp"
#include "dental/segmentation.hpp"

namespace oracles {

using namespace dental;

/// K_e = V * B^T D B with B from the inverse of the 4x4 [1 x y z] matrix and
/// D the 6x6 isotropic matrix in engineering-shear Voigt notation.
Eigen::Matrix<double, 12, 12> element_stiffness(const std::array<Vec3, 4>& x, double lambda, double mu);

/// Dense global stiffness, 3 dofs per node.
Eigen::MatrixXd dense_stiffness(const TetMesh& mesh, const MaterialTable& materials);

/// Solves K u = f with u fixed to `prescribed` on `fixed` dofs by reducing to
/// the free block and factorizing it with LDLT.
Eigen::VectorXd dense_solve(const Eigen::MatrixXd& K, const Eigen::VectorXd& f, const std::vector<std::int64_t>& fixed,
                            const std::vector<double>& prescribed = {});

/// Meyer flood with a plain list as the frontier: every step scans the
/// whole list for the smallest (value, arrival) entry.
LabelVolume meyer_flood(const ScalarVolume& surface, const LabelVolume& mask, const MarkerSet& markers,
                        Connectivity connectivity);

/// Union-find labelling, components numbered by their lowest linear index.
LabelVolume union_find_components(const LabelVolume& mask, Connectivity connectivity);

/// Number of tets using each sorted facet triple.
std::map<std::array<std::int32_t, 3>, int> facet_incidence(const TetMesh& mesh);

/// The six rigid-body modes (three translations, three rotations about the
/// node centroid), each normalised to unit length.
std::vector<Eigen::VectorXd> rigid_modes(const TetMesh& mesh);

}  // namespace oracles
