#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dental {

/// Compressed-row sparse matrix with sorted column indices per row.
struct CsrMatrix {
  std::int64_t rows = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> cols;
  std::vector<double> values;

  std::size_t nonzeros() const { return values.size(); }

  /// Pointer to the stored entry (r, c) or nullptr outside the pattern.
  double* find(std::int64_t r, std::int32_t c);
  double at(std::int64_t r, std::int32_t c) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> diagonal() const;

  /// Max absolute row sum.
  double norm_inf() const;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

struct CgParams {
  double rel_tol = 1e-8;
  std::int64_t max_iter = 0;  // 0 means 10 x number of unknowns
};

struct SolverReport {
  std::int64_t iterations = 0;
  double relative_residual = 0.0;  // ||K u - f|| / ||f||, recomputed at exit
  std::vector<double> history;     // recurrence residual after each iteration
};

struct CgResult {
  std::vector<double> x;
  SolverReport report;
};

/// Jacobi-preconditioned conjugate gradients from x = 0. Throws
/// NonConvergenceError past max_iter and Errc::setup on a non-positive
/// diagonal or curvature.
CgResult solve_cg(const CsrMatrix& a, std::span<const double> b, const CgParams& params = {});

}  // namespace dental
