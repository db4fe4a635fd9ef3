#pragma once

// Symmetric tridiagonal kernels: implicit-shift QL eigensolver (the tql2
// procedure of Bowdler, Martin, Reinsch and Wilkinson, as in EISPACK) and a
// pre-factored Thomas solver for repeated solves with a fixed matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "degctl/error.hpp"

namespace degctl {

template <typename Real>
struct TridiagonalEigen {
  std::vector<Real> values;   // ascending
  std::vector<Real> vectors;  // column-major: eigenvector j is vectors[j*n, (j+1)*n)
  std::size_t n = 0;

  std::span<const Real> vector(std::size_t j) const {
    return {vectors.data() + j * n, n};
  }
};

/// Full eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `offdiag` (length n-1). Eigenvectors are Euclidean
/// unit vectors. Equal eigenvalues keep the solver's output order.
template <typename Real>
TridiagonalEigen<Real> tridiagonal_eigen(std::span<const Real> diag,
                                         std::span<const Real> offdiag,
                                         int max_iterations_per_value = 60) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  if (offdiag.size() + 1 != n) {
    throw Error(ErrorCode::InvalidParameter, "off-diagonal length must be n-1");
  }

  std::vector<Real> d(diag.begin(), diag.end());
  std::vector<Real> e(n, Real(0));
  std::copy(offdiag.begin(), offdiag.end(), e.begin());

  // Eigenvectors are stored column-major so each Givens rotation in the QL
  // sweep touches two contiguous arrays.
  std::vector<Real> z(n * n, Real(0));
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = Real(1);

  const Real eps = std::numeric_limits<Real>::epsilon();
  Real f = 0;
  Real tst1 = 0;

  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iterations_per_value) {
          throw Error(ErrorCode::ConvergenceFailure,
                      "tridiagonal QL did not converge for eigenvalue " + std::to_string(l));
        }

        // Implicit shift from the leading 2x2 block.
        Real g = d[l];
        Real p = (d[l + 1] - g) / (Real(2) * e[l]);
        Real r = std::hypot(p, Real(1));
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const Real dl1 = d[l + 1];
        Real h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        Real c = 1, c2 = 1, c3 = 1;
        const Real el1 = e[l + 1];
        Real s = 0, s2 = 0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);

          Real* zi = z.data() + ii * n;
          Real* zi1 = zi + n;
          for (std::size_t k = 0; k < n; ++k) {
            const Real t = zi1[k];
            zi1[k] = s * zi[k] + c * t;
            zi[k] = c * zi[k] - s * t;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  TridiagonalEigen<Real> out;
  out.n = n;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = d[order[j]];
    std::copy_n(z.begin() + static_cast<std::ptrdiff_t>(order[j] * n), n,
                out.vectors.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  return out;
}

/// LU factors of a (not necessarily symmetric) tridiagonal matrix for the
/// Thomas algorithm. Factor once, solve many times.
template <typename Real>
class ThomasSolver {
 public:
  ThomasSolver() = default;

  /// lower[i] couples row i+1 to column i, upper[i] couples row i to column i+1.
  ThomasSolver(std::span<const Real> lower, std::span<const Real> diag,
               std::span<const Real> upper, Real pivot_floor = Real(1e-300))
      : lower_(lower.begin(), lower.end()), upper_(upper.begin(), upper.end()) {
    const std::size_t n = diag.size();
    if (lower.size() + 1 != n || upper.size() + 1 != n) {
      throw Error(ErrorCode::InvalidParameter, "tridiagonal band lengths must be n-1");
    }
    inv_pivot_.resize(n);
    modified_upper_.resize(n > 0 ? n - 1 : 0);
    Real pivot = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) pivot = diag[i] - lower_[i - 1] * modified_upper_[i - 1];
      if (!(std::abs(pivot) >= pivot_floor)) {
        throw Error(ErrorCode::SolverBreakdown,
                    "Thomas pivot below floor at row " + std::to_string(i));
      }
      inv_pivot_[i] = Real(1) / pivot;
      if (i + 1 < n) modified_upper_[i] = upper_[i] * inv_pivot_[i];
    }
  }

  std::size_t size() const noexcept { return inv_pivot_.size(); }

  /// Solves in place: rhs becomes the solution.
  void solve(std::span<Real> rhs) const {
    const std::size_t n = size();
    if (rhs.size() != n) throw Error(ErrorCode::GridMismatch, "Thomas rhs length");
    if (n == 0) return;
    rhs[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) {
      rhs[i] = (rhs[i] - lower_[i - 1] * rhs[i - 1]) * inv_pivot_[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= modified_upper_[i] * rhs[i + 1];
  }

 private:
  std::vector<Real> lower_;
  std::vector<Real> upper_;
  std::vector<Real> modified_upper_;
  std::vector<Real> inv_pivot_;
};

}  // namespace degctl
