#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "degctl/tridiagonal.hpp"

using namespace degctl;

TEST(TridiagonalEigen, DiscreteLaplacianClosedForm) {
  // tridiag(-1, 2, -1) of size n has eigenvalues 2 - 2 cos(k pi / (n + 1)).
  const std::size_t n = 30;
  std::vector<double> d(n, 2.0), e(n - 1, -1.0);
  const auto r = tridiagonal_eigen<double>(d, e);
  for (std::size_t k = 0; k < n; ++k) {
    const double exact = 2.0 - 2.0 * std::cos(static_cast<double>(k + 1) * std::numbers::pi / (n + 1.0));
    EXPECT_NEAR(r.values[k], exact, 1e-13);
  }
}

TEST(TridiagonalEigen, OrthonormalResiduals) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const std::size_t n = 60;
  std::vector<double> d(n), e(n - 1);
  for (auto& x : d) x = g(rng);
  for (auto& x : e) x = g(rng);
  const auto r = tridiagonal_eigen<double>(d, e);
  for (std::size_t k = 1; k < n; ++k) EXPECT_LE(r.values[k - 1], r.values[k]);
  for (std::size_t j = 0; j < n; ++j) {
    const auto v = r.vector(j);
    for (std::size_t i = 0; i < n; ++i) {
      double av = d[i] * v[i];
      if (i > 0) av += e[i - 1] * v[i - 1];
      if (i + 1 < n) av += e[i] * v[i + 1];
      EXPECT_NEAR(av, r.values[j] * v[i], 1e-12);
    }
    for (std::size_t k = 0; k <= j; ++k) {
      const auto w = r.vector(k);
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += v[i] * w[i];
      EXPECT_NEAR(dot, j == k ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(TridiagonalEigen, DiagonalInput) {
  std::vector<double> d{3.0, -1.0, 2.0}, e{0.0, 0.0};
  const auto r = tridiagonal_eigen<double>(d, e);
  EXPECT_EQ(r.values, (std::vector<double>{-1.0, 2.0, 3.0}));
}

TEST(TridiagonalEigen, IterationCapReported) {
  std::vector<double> d(20), e(19, 1.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(i % 3);
  try {
    tridiagonal_eigen<double>(d, e, 0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ConvergenceFailure);
  }
}

TEST(Thomas, SolvesDiagonallyDominantSystem) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 100;
  std::vector<double> lo(n - 1), di(n), up(n - 1), x(n);
  for (auto& v : lo) v = u(rng);
  for (auto& v : up) v = u(rng);
  for (auto& v : di) v = 3.0 + u(rng);
  for (auto& v : x) v = u(rng);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = di[i] * x[i];
    if (i > 0) b[i] += lo[i - 1] * x[i - 1];
    if (i + 1 < n) b[i] += up[i] * x[i + 1];
  }
  const ThomasSolver<double> solver(lo, di, up);
  solver.solve(b);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b[i], x[i], 1e-13);
}

TEST(Thomas, ZeroPivotBreakdown) {
  std::vector<double> lo{1.0}, di{0.0, 1.0}, up{1.0};
  try {
    ThomasSolver<double> s(lo, di, up);
    std::vector<double> b{1.0, 1.0};
    s.solve(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SolverBreakdown);
  }
}
