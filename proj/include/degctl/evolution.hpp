#pragma once

// Time evolution of v_t = (a v_x)_x + (alpha + beta) v with zero-flux ends,
// by spectral expansion and by implicit finite-volume stepping, together with
// the monitors for nonnegativity, the Gronwall envelope and the remainder bound.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "degctl/control.hpp"
#include "degctl/discretization.hpp"
#include "degctl/error.hpp"
#include "degctl/spectral.hpp"
#include "degctl/tridiagonal.hpp"

namespace degctl {

inline constexpr std::size_t kDefaultSnapshots = 64;

namespace detail {

inline std::vector<double> uniform_times(double T, std::size_t snapshots) {
  if (T <= 0.0 || snapshots == 0) return {0.0};
  std::vector<double> t(snapshots + 1);
  for (std::size_t j = 0; j <= snapshots; ++j) {
    t[j] = T * static_cast<double>(j) / static_cast<double>(snapshots);
  }
  t.back() = T;
  return t;
}

}  // namespace detail

/// v(t) = sum_{k < k_max} e^{(-lambda_k + beta) t} <v0, w_k> w_k, sampled at
/// snapshots + 1 uniform times including 0 and T. states[0] is v0 itself.
inline EvolutionTrace evolve_spectral(const SpectralDecomposition& decomp, double beta,
                                      const StateField& v0, double T, std::size_t k_max,
                                      std::size_t snapshots = kDefaultSnapshots) {
  if (!(v0.grid() == decomp.grid())) throw Error(ErrorCode::GridMismatch, "evolve_spectral");
  if (T < 0.0) throw Error(ErrorCode::InvalidParameter, "negative horizon");
  const auto coeffs = project(decomp, v0, k_max);
  const double norm0 = l2_norm(v0);
  const std::size_t n = decomp.grid().size();

  EvolutionTrace trace;
  for (double t : detail::uniform_times(T, snapshots)) {
    if (t == 0.0) {
      trace.push(0.0, v0);
    } else {
      StateField v(decomp.grid());
      auto out = v.values();
      for (std::size_t k = 0; k < k_max; ++k) {
        const double amp = std::exp((-decomp.lambda(k) + beta) * t) * coeffs[k];
        if (amp == 0.0) continue;
        const auto w = decomp.mode_values(k);
        for (std::size_t i = 0; i < n; ++i) out[i] += amp * w[i];
      }
      trace.push(t, std::move(v));
    }
    trace.truncation_bounds.push_back(
        k_max < decomp.size() ? std::exp((-decomp.lambda(k_max) + beta) * t) * norm0 : 0.0);
  }
  return trace;
}

enum class TimeScheme { BackwardEuler, CrankNicolson };

struct ImplicitOptions {
  TimeScheme scheme = TimeScheme::BackwardEuler;
  /// Enforce the M-matrix step bound dt * max(alpha + beta)^+ < 1 (backward Euler only).
  bool certify_positivity = false;
  std::size_t snapshots = kDefaultSnapshots;
};

/// Largest step for which I - dt (A + beta I) is an M-matrix.
inline double m_matrix_step_bound(const AssembledOperator& op, double beta) {
  double growth = 0.0;
  for (double a : op.alpha().values()) growth = std::max(growth, a + beta);
  return growth > 0.0 ? 1.0 / growth : std::numeric_limits<double>::infinity();
}

inline EvolutionTrace evolve_implicit(const AssembledOperator& op, double beta, const StateField& v0,
                                      double T, double dt, const ImplicitOptions& options = {}) {
  if (!(v0.grid() == op.grid())) throw Error(ErrorCode::GridMismatch, "evolve_implicit");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidParameter, "dt must be positive");
  if (T < 0.0) throw Error(ErrorCode::InvalidParameter, "negative horizon");
  if (options.certify_positivity) {
    if (options.scheme != TimeScheme::BackwardEuler) {
      throw Error(ErrorCode::InvalidParameter, "positivity is only certified for backward Euler");
    }
    if (!(dt < m_matrix_step_bound(op, beta))) {
      throw Error(ErrorCode::StepTooLarge,
                  "dt = " + std::to_string(dt) + " violates the M-matrix bound " +
                      std::to_string(m_matrix_step_bound(op, beta)));
    }
  }

  EvolutionTrace trace;
  trace.push(0.0, v0);
  if (T == 0.0) return trace;

  const auto steps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(T / dt * (1.0 - 1e-12))));
  const double k = T / static_cast<double>(steps);
  const std::size_t n = op.size();
  const double theta = options.scheme == TimeScheme::BackwardEuler ? 1.0 : 0.5;

  std::vector<double> lhs_diag(n);
  std::vector<double> lhs_off(n - 1);
  for (std::size_t i = 0; i < n; ++i) lhs_diag[i] = 1.0 - theta * k * (op.diag()[i] + beta);
  for (std::size_t i = 0; i + 1 < n; ++i) lhs_off[i] = -theta * k * op.offdiag()[i];
  const ThomasSolver<double> solver(lhs_off, lhs_diag, lhs_off);

  const std::size_t snaps = std::min(options.snapshots, steps);
  std::size_t next = 1;
  auto snapshot_step = [&](std::size_t j) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(j) * static_cast<double>(steps) /
                                                 static_cast<double>(snaps)));
  };

  std::vector<double> v(v0.values().begin(), v0.values().end());
  std::vector<double> rhs(n);
  for (std::size_t s = 1; s <= steps; ++s) {
    if (theta == 1.0) {
      rhs = v;
    } else {
      const double w = (1.0 - theta) * k;
      for (std::size_t i = 0; i < n; ++i) {
        double r = (op.diag()[i] + beta) * v[i];
        if (i > 0) r += op.offdiag()[i - 1] * v[i - 1];
        if (i + 1 < n) r += op.offdiag()[i] * v[i + 1];
        rhs[i] = v[i] + w * r;
      }
    }
    solver.solve(rhs);
    v.swap(rhs);
    if (next <= snaps && s == snapshot_step(next)) {
      trace.push(next == snaps ? T : static_cast<double>(s) * k, StateField(op.grid(), v));
      ++next;
    }
  }
  return trace;
}

/// v^- = max(0, -v) componentwise.
inline StateField negative_part(const StateField& v) {
  StateField out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, -v[i]);
  return out;
}

struct NonnegativityReport {
  double min_value = 0.0;
  double max_negative_norm = 0.0;
  double sup_norm = 0.0;
  bool passed = true;
};

inline NonnegativityReport check_nonnegativity(const EvolutionTrace& trace) {
  NonnegativityReport r;
  if (trace.empty()) return r;
  r.min_value = *std::min_element(trace.min_values.begin(), trace.min_values.end());
  r.max_negative_norm =
      *std::max_element(trace.negative_part_norms.begin(), trace.negative_part_norms.end());
  r.sup_norm = *std::max_element(trace.l2_norms.begin(), trace.l2_norms.end());
  r.passed = r.min_value >= -1e-10 * std::max(1.0, r.sup_norm);
  return r;
}

/// ||v(t)||^2 <= e^{2 alpha_sup t} ||v0||^2 (1 + 1e-8) at every snapshot.
inline bool gronwall_envelope(const EvolutionTrace& trace, double alpha_sup) {
  if (trace.empty()) return true;
  const double e0 = trace.l2_norms.front() * trace.l2_norms.front();
  for (std::size_t j = 0; j < trace.times.size(); ++j) {
    const double e = trace.l2_norms[j] * trace.l2_norms[j];
    if (e > std::exp(2.0 * alpha_sup * trace.times[j]) * e0 * (1.0 + 1e-8)) return false;
  }
  return true;
}

/// ||alpha + beta||_inf over the grid.
inline double control_sup(const StateField& alpha, double beta) {
  double s = 0.0;
  for (double a : alpha.values()) s = std::max(s, std::abs(a + beta));
  return s;
}

inline double steering_error(const EvolutionTrace& trace, const TargetState& target) {
  return l2_distance(trace.final_state(), target.field);
}

/// ||r(t)|| for r(t) = sum_{k >= 2} e^{(-lambda_k + beta) t} c_k w_k, evaluated
/// in physical space at each requested time.
inline std::vector<double> remainder_norms(const SpectralDecomposition& decomp, double beta,
                                           const StateField& v0, const std::vector<double>& times) {
  const std::size_t n = decomp.size();
  const auto c = project(decomp, v0, n);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    StateField r(decomp.grid());
    auto rv = r.values();
    for (std::size_t k = 1; k < n; ++k) {
      const double amp = std::exp((-decomp.lambda(k) + beta) * t) * c[k];
      if (amp == 0.0) continue;
      const auto w = decomp.mode_values(k);
      for (std::size_t i = 0; i < rv.size(); ++i) rv[i] += amp * w[i];
    }
    out.push_back(l2_norm(r));
  }
  return out;
}

inline bool remainder_decay(const SpectralDecomposition& decomp, double beta, const StateField& v0,
                            const std::vector<double>& times) {
  if (decomp.size() < 2 || !(decomp.lambda(1) > decomp.lambda(0))) {
    throw Error(ErrorCode::NonpositiveGap, "remainder bound needs lambda_2 > lambda_1");
  }
  const auto norms = remainder_norms(decomp, beta, v0, times);
  const double norm0 = l2_norm(v0);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double bound = std::exp((-decomp.lambda(1) + beta) * times[j]) * norm0;
    if (norms[j] > bound * (1.0 + 1e-9)) return false;
  }
  return true;
}

}  // namespace degctl
