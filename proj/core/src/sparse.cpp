#include "dental/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dental/error.hpp"

namespace dental {

double* CsrMatrix::find(std::int64_t r, std::int32_t c) {
  const auto begin = cols.begin() + row_ptr[static_cast<std::size_t>(r)];
  const auto end = cols.begin() + row_ptr[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return nullptr;
  return &values[static_cast<std::size_t>(it - cols.begin())];
}

double CsrMatrix::at(std::int64_t r, std::int32_t c) const {
  const auto begin = cols.begin() + row_ptr[static_cast<std::size_t>(r)];
  const auto end = cols.begin() + row_ptr[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(begin, end, c);
  if (it == end || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - cols.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (auto n = row_ptr[static_cast<std::size_t>(r)]; n < row_ptr[static_cast<std::size_t>(r) + 1]; ++n) {
      s += values[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(cols[static_cast<std::size_t>(n)])];
    }
    y[static_cast<std::size_t>(r)] = s;
  }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(static_cast<std::size_t>(rows));
  multiply(x, y);
  return y;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) d[static_cast<std::size_t>(r)] = at(r, static_cast<std::int32_t>(r));
  return d;
}

double CsrMatrix::norm_inf() const {
  double best = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (auto n = row_ptr[static_cast<std::size_t>(r)]; n < row_ptr[static_cast<std::size_t>(r) + 1]; ++n) {
      s += std::abs(values[static_cast<std::size_t>(n)]);
    }
    best = std::max(best, s);
  }
  return best;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// r = b - A x with long double accumulation. In double the cancellation in
// A x puts a floor of roughly eps * |A| |x| / |b| under the residual, which
// high-contrast materials push above 1e-10; with the extra bits the restarts
// below act as iterative refinement and get past it.
void true_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b, std::vector<double>& r) {
  for (std::int64_t i = 0; i < a.rows; ++i) {
    const auto row = static_cast<std::size_t>(i);
    long double s = b[row];
    for (auto n = a.row_ptr[row]; n < a.row_ptr[row + 1]; ++n) {
      const auto k = static_cast<std::size_t>(n);
      s -= static_cast<long double>(a.values[k]) * x[static_cast<std::size_t>(a.cols[k])];
    }
    r[row] = static_cast<double>(s);
  }
}

}  // namespace

CgResult solve_cg(const CsrMatrix& a, std::span<const double> b, const CgParams& params) {
  const auto n = static_cast<std::size_t>(a.rows);
  if (b.size() != n) throw Error(Errc::setup, "right-hand side size does not match the matrix");
  if (!(params.rel_tol > 0.0)) throw Error(Errc::parameter, "rel_tol must be positive");
  const std::int64_t max_iter = params.max_iter > 0 ? params.max_iter : 10 * a.rows;

  CgResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return out;

  std::vector<double> inv_diag = a.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      throw Error(Errc::setup, "non-positive diagonal at row " + std::to_string(i) + ": matrix is not SPD");
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(n), p(n), q(n);
  std::int64_t it = 0;
  // Restarts from the current iterate if the recurrence residual drifted away
  // from the true one.
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double rel = norm2(r) / bnorm;
    while (rel > params.rel_tol) {
      if (it >= max_iter) {
        std::ostringstream msg;
        msg << "CG did not converge in " << max_iter << " iterations (relative residual " << rel << ")";
        throw NonConvergenceError(msg.str(), out.report.history);
      }
      a.multiply(p, q);
      const double curvature = dot(p, q);
      if (!(curvature > 0.0)) throw Error(Errc::setup, "non-positive curvature in CG: matrix is not SPD");
      const double alpha = rz / curvature;
      for (std::size_t i = 0; i < n; ++i) {
        out.x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      rel = norm2(r) / bnorm;
      out.report.history.push_back(rel);
      ++it;
    }
    true_residual(a, out.x, b, r);
    out.report.relative_residual = norm2(r) / bnorm;
    if (out.report.relative_residual <= params.rel_tol) break;
  }
  out.report.iterations = it;
  return out;
}

}  // namespace dental
