#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "degctl/spectral.hpp"

using namespace degctl;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Spectral, ConstantCoefficientNeumannLaplacian) {
  // Discrete Neumann Laplacian: (4/h^2) sin^2((k-1) pi / (2n)), continuum (k-1)^2 pi^2 / 4.
  const Grid g(200);
  const auto d = eigendecompose(assemble(make_coefficient(kind::Constant{1.0}), g));
  const double h = g.h();
  for (std::size_t k = 0; k < 8; ++k) {
    const double s = std::sin(static_cast<double>(k) * std::numbers::pi / (2.0 * 200));
    EXPECT_NEAR(d.lambda(k), 4.0 / (h * h) * s * s, 1e-9 * std::max(1.0, d.lambda(k)));
  }
  EXPECT_NEAR(d.lambda(1), std::numbers::pi * std::numbers::pi / 4.0, 1e-3);
}

TEST(Spectral, LegendreEigenvaluesAreExact) {
  // The stencil maps polynomials of degree m to degree m, so k(k-1) is reproduced exactly.
  const Grid g(100);
  const auto d = eigendecompose(assemble(make_coefficient(kind::Legendre{}), g));
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_NEAR(d.lambda(k), static_cast<double>(k * (k + 1)), 1e-9 * std::max(1.0, d.lambda(k)));
  }
  // ground mode is the normalized constant
  for (double w : d.mode_values(0)) EXPECT_NEAR(w, 1.0 / std::sqrt(2.0), 1e-10);
  // second mode is -sqrt(3/2) x (first entry positive), up to the h^2 correction of the midpoint norm
  const auto w1 = d.mode_values(1);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(w1[i], -std::sqrt(1.5) * g.center(i), 1e-3);
}

TEST(Spectral, SignConvention) {
  const Grid g(64);
  const auto d = eigendecompose(assemble(make_coefficient(kind::Legendre{}), g));
  // ground mode has positive sum; the rest are mean-free, so their first entry is positive
  double s = 0.0;
  for (double w : d.mode_values(0)) s += w;
  EXPECT_GT(s, 0.0);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_GT(d.mode_values(k)[0], 0.0) << k;
}

TEST(Spectral, MrrrMatchesImplicitQl) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  const Grid g(120);
  StateField alpha(g);
  for (std::size_t i = 0; i < g.size(); ++i) alpha[i] = gauss(rng);
  const auto op = assemble(make_coefficient(kind::PowerDegenerate{1.5}), alpha, g);
  const auto a = eigendecompose(op, EigenSolver::Mrrr);
  const auto b = eigendecompose(op, EigenSolver::ImplicitQl);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(a.lambda(k), b.lambda(k), 1e-9 * std::max(1.0, std::abs(a.lambda(k))));
  }
  for (std::size_t k = 0; k < 10; ++k) EXPECT_LT(max_abs_diff(a.mode_values(k), b.mode_values(k)), 1e-7);
}

TEST(Spectral, OrthonormalModes) {
  const Grid g(80);
  const auto d = eigendecompose(assemble(make_coefficient(kind::PowerDegenerate{0.5}), g));
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t k = 0; k <= j; ++k) {
      EXPECT_NEAR(inner_product(d.mode(j), d.mode(k)), j == k ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(Spectral, ParsevalAndProjection) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  const Grid g(150);
  const auto d = eigendecompose(assemble(make_coefficient(kind::Legendre{}), g));
  StateField v(g);
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = gauss(rng);
  EXPECT_LE(parseval_defect(d, v), 1e-10 * inner_product(v, v));
  const auto c = project(d, StateField::constant(g, 2.0), 3);
  EXPECT_NEAR(c[0], 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(c[1], 0.0, 1e-12);
  EXPECT_THROW(project(d, v, g.size() + 1), Error);
  EXPECT_THROW(project(d, StateField(Grid(10)), 1), Error);
}

TEST(Spectral, GapWarning) {
  const Grid g(4);
  SpectralDecomposition d(g, {1.0, 1.0 + 1e-10, 3.0, 4.0}, std::vector<double>(16, 0.0));
  ASSERT_EQ(d.warnings().size(), 1u);
  EXPECT_EQ(d.warnings()[0].rfind("GapTooSmall", 0), 0u);
}

TEST(Spectral, ShiftMovesEigenvaluesOnly) {
  const Grid g(100);
  const auto op = assemble(make_coefficient(kind::Legendre{}), g);
  const auto d0 = eigendecompose(op);
  for (double beta : {-1.0, 0.5, 3.0}) {
    const auto d = eigendecompose(op.shifted(beta));
    for (std::size_t k = 0; k < 8; ++k) {
      EXPECT_NEAR(d.lambda(k), d0.lambda(k) - beta, 1e-9 * std::max(1.0, d0.lambda(k)));
      EXPECT_LT(max_abs_diff(d.mode_values(k), d0.mode_values(k)), 1e-8);
    }
  }
}

TEST(Rayleigh, ZeroControlAlwaysHolds) {
  const Grid g(30);
  const auto a = make_coefficient(kind::Legendre{});
  EXPECT_TRUE(rayleigh_check(a, StateField(g), StateField::sample(g, [](double x) { return x * x; })));
  // a large positive constant control violates the inequality for constants
  EXPECT_FALSE(rayleigh_check(a, StateField::constant(g, 1.0), StateField::constant(g, 1.0)));
}
