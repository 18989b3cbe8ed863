#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "dental/error.hpp"
#include "dental/sparse.hpp"

using namespace dental;

namespace {

CsrMatrix from_dense(const Eigen::MatrixXd& d) {
  CsrMatrix m;
  m.rows = d.rows();
  m.row_ptr.push_back(0);
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      if (d(r, c) != 0.0 || r == c) {
        m.cols.push_back(static_cast<std::int32_t>(c));
        m.values.push_back(d(r, c));
      }
    }
    m.row_ptr.push_back(static_cast<std::int64_t>(m.values.size()));
  }
  return m;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double density) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), coin(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < r; ++c)
      if (coin(rng) < density) a(r, c) = a(c, r) = u(rng);
  for (int r = 0; r < n; ++r) a(r, r) = a.row(r).cwiseAbs().sum() + 0.1 + coin(rng);
  return a;
}

}  // namespace

TEST(Csr, Accessors) {
  Eigen::MatrixXd d(3, 3);
  d << 4, -1, 0, -1, 4, -2, 0, -2, 5;
  CsrMatrix m = from_dense(d);
  EXPECT_EQ(m.nonzeros(), 7u);
  EXPECT_EQ(m.at(1, 2), -2.0);
  EXPECT_EQ(m.at(0, 2), 0.0);
  EXPECT_EQ(m.find(0, 2), nullptr);
  *m.find(2, 2) = 6.0;
  EXPECT_EQ(m.diagonal(), (std::vector<double>{4, 4, 6}));
  EXPECT_EQ(m.norm_inf(), 8.0);
  EXPECT_EQ(m.multiply(std::vector<double>{1, 2, 3}), (std::vector<double>{2, 1, 14}));
  const std::vector<double> a{3, -4, 0};
  EXPECT_EQ(norm2(a), 5.0);
  EXPECT_EQ(norm_inf(a), 4.0);
  EXPECT_EQ(dot(a, a), 25.0);
}

TEST(Cg, ZeroRhsGivesZeroInNoIterations) {
  const CsrMatrix m = from_dense(Eigen::MatrixXd::Identity(4, 4) * 2.0);
  const CgResult r = solve_cg(m, std::vector<double>(4, 0.0));
  EXPECT_EQ(r.x, std::vector<double>(4, 0.0));
  EXPECT_EQ(r.report.iterations, 0);
}

TEST(Cg, IdentityInOneIteration) {
  const CsrMatrix m = from_dense(Eigen::MatrixXd::Identity(5, 5));
  const std::vector<double> f{1, -2, 3, 0.5, 7};
  const CgResult r = solve_cg(m, f);
  EXPECT_EQ(r.report.iterations, 1);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(r.x[i], f[i]);
}

TEST(Cg, MatchesDenseFactorization) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 10 + 20 * trial;
    const Eigen::MatrixXd a = random_spd(rng, n, 0.1);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = g(rng);
    const Eigen::VectorXd x = a.ldlt().solve(b);
    const CgResult r = solve_cg(from_dense(a), std::vector<double>(b.data(), b.data() + n), {1e-12, 0});
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(r.x[static_cast<std::size_t>(i)] - x(i)));
    EXPECT_LE(err / x.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(r.report.relative_residual, 1e-12);
    EXPECT_EQ(r.report.history.size(), static_cast<std::size_t>(r.report.iterations));
  }
}

TEST(Cg, NonConvergenceCarriesHistory) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd a = random_spd(rng, 40, 0.3);
  const std::vector<double> b(40, 1.0);
  try {
    solve_cg(from_dense(a), b, {1e-14, 2});
    FAIL();
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.code(), Errc::non_convergence);
    EXPECT_EQ(e.residual_history().size(), 2u);
  }
}

TEST(Cg, DetectsNonSpd) {
  Eigen::MatrixXd d(2, 2);
  d << 1, 2, 2, 1;
  try {
    solve_cg(from_dense(d), std::vector<double>{1, -1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::setup);
  }
  d << -1, 0, 0, 1;
  EXPECT_THROW(solve_cg(from_dense(d), std::vector<double>{1, 1}), Error);
  EXPECT_THROW(solve_cg(from_dense(d), std::vector<double>{1}), Error);
}
