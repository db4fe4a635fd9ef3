#pragma once

// Eigendecomposition of -A for the assembled operator A, normalized in the
// discrete L2 inner product, plus the Parseval and Rayleigh diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <lapacke.h>

#include "degctl/discretization.hpp"
#include "degctl/error.hpp"
#include "degctl/tridiagonal.hpp"

namespace degctl {

enum class EigenSolver {
  Mrrr,          // LAPACK dstevr
  ImplicitQl,    // tridiagonal_eigen, O(n^3) with vectors
};

class SpectralDecomposition {
 public:
  static constexpr double kGapWarning = 1e-8;

  SpectralDecomposition(Grid grid, std::vector<double> lambdas, std::vector<double> modes)
      : grid_(grid), lambdas_(std::move(lambdas)), modes_(std::move(modes)) {
    if (lambdas_.size() >= 2) {
      gap_ = lambdas_[1] - lambdas_[0];
      if (gap_ < kGapWarning) {
        warnings_.push_back("GapTooSmall: lambda_2 - lambda_1 = " + std::to_string(gap_));
      }
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return lambdas_.size(); }
  const std::vector<double>& lambdas() const noexcept { return lambdas_; }
  /// 0-based: lambda(0) is the ground eigenvalue.
  double lambda(std::size_t k) const { return lambdas_.at(k); }
  double gap() const noexcept { return gap_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  std::span<const double> mode_values(std::size_t k) const {
    return {modes_.data() + k * grid_.size(), grid_.size()};
  }
  StateField mode(std::size_t k) const {
    auto v = mode_values(k);
    return StateField(grid_, std::vector<double>(v.begin(), v.end()));
  }

 private:
  Grid grid_;
  std::vector<double> lambdas_;
  std::vector<double> modes_;  // mode k at [k*n, (k+1)*n)
  double gap_ = 0.0;
  std::vector<std::string> warnings_;
};

namespace detail {

inline void mrrr_eigen(std::vector<double> d, std::vector<double> e, std::vector<double>& values,
                       std::vector<double>& vectors) {
  const lapack_int n = static_cast<lapack_int>(d.size());
  e.resize(d.size(), 0.0);
  values.assign(d.size(), 0.0);
  vectors.assign(d.size() * d.size(), 0.0);
  std::vector<lapack_int> support(2 * d.size());
  lapack_int found = 0;
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', n, d.data(), e.data(), 0.0, 0.0, 0, 0, 0.0, &found,
                     values.data(), vectors.data(), n, support.data());
  if (info != 0 || found != n) {
    throw Error(ErrorCode::ConvergenceFailure, "dstevr failed, info = " + std::to_string(info));
  }
}

// <w,1> >= 0; when that sum vanishes, first clearly nonzero entry positive.
inline void normalize_sign(std::span<double> w) {
  double sum = 0.0;
  double abs_sum = 0.0;
  double abs_max = 0.0;
  for (double x : w) {
    sum += x;
    abs_sum += std::abs(x);
    abs_max = std::max(abs_max, std::abs(x));
  }
  bool flip = false;
  if (std::abs(sum) > 1e-10 * abs_sum) {
    flip = sum < 0.0;
  } else {
    for (double x : w) {
      if (std::abs(x) > 1e-8 * abs_max) {
        flip = x < 0.0;
        break;
      }
    }
  }
  if (flip) {
    for (double& x : w) x = -x;
  }
}

}  // namespace detail

/// All eigenpairs of -op, ascending, with ||w_k|| = 1 in the midpoint L2 norm.
inline SpectralDecomposition eigendecompose(const AssembledOperator& op,
                                            EigenSolver solver = EigenSolver::Mrrr) {
  const std::size_t n = op.size();
  std::vector<double> d(n);
  std::vector<double> e(n - 1);
  for (std::size_t i = 0; i < n; ++i) d[i] = -op.diag()[i];
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = -op.offdiag()[i];

  std::vector<double> values;
  std::vector<double> vectors;
  if (solver == EigenSolver::Mrrr) {
    detail::mrrr_eigen(std::move(d), std::move(e), values, vectors);
  } else {
    auto r = tridiagonal_eigen<double>(d, e);
    values = std::move(r.values);
    vectors = std::move(r.vectors);
  }

  const double scale = 1.0 / std::sqrt(op.grid().h());
  for (double& x : vectors) x *= scale;
  for (std::size_t k = 0; k < n; ++k) {
    detail::normalize_sign({vectors.data() + k * n, n});
  }
  return SpectralDecomposition(op.grid(), std::move(values), std::move(vectors));
}

/// c_k = <v, w_k> for k = 0..k_max-1.
inline std::vector<double> project(const SpectralDecomposition& decomp, const StateField& v,
                                   std::size_t k_max) {
  if (!(v.grid() == decomp.grid())) throw Error(ErrorCode::GridMismatch, "project");
  if (k_max > decomp.size()) {
    throw Error(ErrorCode::InvalidParameter, "k_max exceeds the number of modes");
  }
  const double h = decomp.grid().h();
  const auto vals = v.values();
  std::vector<double> c(k_max);
  for (std::size_t k = 0; k < k_max; ++k) {
    const auto w = decomp.mode_values(k);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += vals[i] * w[i];
    c[k] = h * s;
  }
  return c;
}

inline double parseval_defect(const SpectralDecomposition& decomp, const StateField& v) {
  const auto c = project(decomp, v, decomp.size());
  double sum = 0.0;
  for (double ck : c) sum += ck * ck;
  return std::abs(inner_product(v, v) - sum);
}

/// int alpha_* u^2 <= int a u_x^2, up to 1e-9 (1 + ||u||^2).
inline bool rayleigh_check(const DiffusionCoefficient& coeff, const StateField& alpha_star,
                           const StateField& u) {
  alpha_star.require_same_grid(u);
  StateField au = u;
  for (std::size_t i = 0; i < au.size(); ++i) au[i] *= alpha_star[i];
  const double lhs = inner_product(au, u);
  const double s = weighted_seminorm(coeff, u);
  return lhs <= s * s + 1e-9 * (1.0 + inner_product(u, u));
}

}  // namespace degctl
