#pragma once

// Static multiplicative control synthesis. Given a strictly positive target
// v_d, the coefficient alpha_* = -(a v_d')' / v_d makes v_d the zero-energy
// ground mode of A_0 + alpha_*; the horizon T and the uniform shift beta then
// trade the decay of all other modes against the growth needed to match the
// amplitude of v_d.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "degctl/discretization.hpp"
#include "degctl/error.hpp"
#include "degctl/spectral.hpp"

namespace degctl {

enum class ControlMode { T1, C1 };

inline std::string to_string(ControlMode m) { return m == ControlMode::T1 ? "T1" : "C1"; }

struct TargetDerivatives {
  std::function<double(double)> first;
  std::function<double(double)> second;
};

struct TargetState {
  StateField field;
  double min_value = 0.0;
  /// ||mollified - raw|| (zero when built directly).
  double mollification_error = 0.0;
  std::optional<TargetDerivatives> derivatives;

  static TargetState from_field(StateField f) {
    const double m = f.min();
    return TargetState{std::move(f), m, 0.0, std::nullopt};
  }

  static TargetState from_function(const Grid& g, const std::function<double(double)>& v,
                                   std::function<double(double)> dv,
                                   std::function<double(double)> d2v) {
    auto t = from_field(StateField::sample(g, v));
    t.derivatives = TargetDerivatives{std::move(dv), std::move(d2v)};
    return t;
  }
};

/// Gaussian smoothing (std. dev. delta, even reflection at +-1) followed by the
/// floor max(., delta), which keeps compactly supported targets strictly positive.
inline TargetState mollify_target(const StateField& raw, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidParameter, "mollifier width must be positive");
  for (double v : raw.values()) {
    if (v < -1e-12) throw Error(ErrorCode::NegativeTarget, "raw target has a negative value");
  }
  const Grid& g = raw.grid();
  const auto n = static_cast<long>(g.size());
  const double h = g.h();
  const long reach = static_cast<long>(std::ceil(6.0 * delta / h));

  std::vector<double> weights(static_cast<std::size_t>(2 * reach + 1));
  double total = 0.0;
  for (long j = -reach; j <= reach; ++j) {
    const double s = static_cast<double>(j) * h / delta;
    const double w = std::exp(-0.5 * s * s);
    weights[static_cast<std::size_t>(j + reach)] = w;
    total += w;
  }
  for (double& w : weights) w /= total;

  auto reflect = [n](long m) {
    const long period = 2 * n;
    m %= period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
  };

  StateField out(g);
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (long j = -reach; j <= reach; ++j) {
      s += weights[static_cast<std::size_t>(j + reach)] * raw[static_cast<std::size_t>(reflect(i + j))];
    }
    out[static_cast<std::size_t>(i)] = std::max(s, delta);
  }
  auto t = TargetState::from_field(std::move(out));
  t.mollification_error = l2_distance(t.field, raw);
  return t;
}

/// alpha_* = -(a v_d')' / v_d, from analytic derivatives when the target has
/// them, otherwise from the same conservative stencil used by assemble() so
/// that (A_0 + alpha_*) v_d vanishes to rounding.
inline StateField synthesize_alpha_star(const DiffusionCoefficient& coeff, const TargetState& target) {
  if (target.min_value < 1e-10) {
    throw Error(ErrorCode::DegenerateTarget, "target minimum " + std::to_string(target.min_value));
  }
  const Grid& g = target.field.grid();
  StateField alpha(g);
  if (target.derivatives) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.center(i);
      const double flux_div = coeff.derivative(x) * target.derivatives->first(x) +
                              coeff(x) * target.derivatives->second(x);
      alpha[i] = -flux_div / target.field[i];
    }
  } else {
    const auto laplacian = assemble(coeff, g).apply(target.field);
    for (std::size_t i = 0; i < g.size(); ++i) alpha[i] = -laplacian[i] / target.field[i];
  }
  return alpha;
}

/// Validates the hypotheses of the chosen mode and returns <v0, v_d>.
inline double check_admissibility(const StateField& v0, const TargetState& target, ControlMode mode) {
  v0.require_same_grid(target.field);
  const double norm0 = l2_norm(v0);
  if (norm0 == 0.0) throw Error(ErrorCode::ZeroInitialState, "initial state is identically zero");
  if (mode == ControlMode::T1) {
    for (double v : v0.values()) {
      if (v < -1e-12) throw Error(ErrorCode::NotNonnegative, "initial state takes negative values");
    }
  }
  const double overlap = inner_product(v0, target.field);
  // Odd/even cancellations leave O(eps) residue; treat those as zero overlap.
  if (overlap <= 1e-12 * norm0 * l2_norm(target.field)) {
    throw Error(ErrorCode::NonpositiveOverlap,
                "<v0, v_d> = " + std::to_string(overlap) + " is not positive");
  }
  return overlap;
}

struct Horizon {
  double T = 0.0;
  bool clamped = false;
};

/// exp(-lambda2 T) = eps <v0,v_d> / (||v0|| ||v_d||^2); T = 0 (clamped) when
/// the right-hand side is not below one.
inline Horizon choose_horizon(double epsilon, const StateField& v0, const TargetState& target,
                              double lambda2) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidParameter, "epsilon must be positive");
  if (lambda2 <= 1e-8) {
    throw Error(ErrorCode::NonpositiveGap, "lambda_2 = " + std::to_string(lambda2));
  }
  const double overlap = inner_product(v0, target.field);
  const double vd2 = inner_product(target.field, target.field);
  const double rhs = epsilon * overlap / (l2_norm(v0) * vd2);
  if (!(rhs > 0.0)) throw Error(ErrorCode::NonpositiveOverlap, "<v0, v_d> is not positive");
  if (rhs >= 1.0) return {0.0, true};
  return {-std::log(rhs) / lambda2, false};
}

inline double choose_beta(double horizon_T, const StateField& v0, const TargetState& target) {
  if (!(horizon_T > 0.0)) throw Error(ErrorCode::ZeroHorizon, "beta needs a positive horizon");
  const double overlap = inner_product(v0, target.field);
  if (!(overlap > 0.0)) throw Error(ErrorCode::NonpositiveOverlap, "<v0, v_d> is not positive");
  const double vd2 = inner_product(target.field, target.field);
  return std::log(vd2 / overlap) / horizon_T;
}

struct ControlPlan {
  TargetState target;
  StateField alpha_star;
  double beta = 0.0;
  double horizon_T = 0.0;
  double epsilon = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double overlap = 0.0;
  double v0_norm = 0.0;
  /// e^{(-lambda2 + beta) T} ||v0|| (== epsilon) or ||v0 - v_d|| when clamped.
  double predicted_error = 0.0;
  double ground_mode_deviation = 0.0;
  bool clamped = false;
  std::vector<std::string> warnings{};
  std::shared_ptr<const SpectralDecomposition> spectrum{};  // of A_0 + alpha_*
  std::shared_ptr<const AssembledOperator> op{};           // A_0 + alpha_* (beta not included)
};

struct PlanOptions {
  double mollifier_delta = 1e-3;
  EigenSolver solver = EigenSolver::Mrrr;
};

inline ControlPlan build_plan(const DiffusionCoefficient& coeff, const StateField& v0,
                              const StateField& raw_target, double epsilon, ControlMode mode,
                              const PlanOptions& options = {}) {
  v0.require_same_grid(raw_target);
  ControlPlan plan{.target = mollify_target(raw_target, options.mollifier_delta), .alpha_star = StateField(v0.grid())};
  plan.epsilon = epsilon;
  plan.overlap = check_admissibility(v0, plan.target, mode);
  plan.v0_norm = l2_norm(v0);
  plan.alpha_star = synthesize_alpha_star(coeff, plan.target);

  plan.op = std::make_shared<AssembledOperator>(assemble(coeff, plan.alpha_star, v0.grid()));
  plan.spectrum = std::make_shared<SpectralDecomposition>(eigendecompose(*plan.op, options.solver));
  const auto& eig = *plan.spectrum;
  plan.warnings = eig.warnings();
  plan.lambda1 = eig.lambda(0);
  plan.lambda2 = eig.lambda(1);

  StateField ground_expected = plan.target.field;
  ground_expected *= 1.0 / l2_norm(ground_expected);
  plan.ground_mode_deviation = l2_distance(eig.mode(0), ground_expected);
  if (std::abs(plan.lambda1) > 1e-6 * std::max(1.0, plan.lambda2) ||
      plan.ground_mode_deviation > 1e-3) {
    throw Error(ErrorCode::GroundModeMismatch,
                "lambda_1 = " + std::to_string(plan.lambda1) +
                    ", ||w_1 - v_d/||v_d|| || = " + std::to_string(plan.ground_mode_deviation));
  }

  const Horizon horizon = choose_horizon(epsilon, v0, plan.target, plan.lambda2);
  plan.clamped = horizon.clamped;
  plan.horizon_T = horizon.T;
  if (horizon.clamped) {
    plan.warnings.push_back("HorizonClamped: epsilon is not small enough for a positive T; "
                            "the initial state is reported against the target");
    plan.beta = 0.0;
    plan.predicted_error = l2_distance(v0, plan.target.field);
  } else {
    plan.beta = choose_beta(horizon.T, v0, plan.target);
    plan.predicted_error = std::exp((-plan.lambda2 + plan.beta) * plan.horizon_T) * plan.v0_norm;
  }
  return plan;
}

}  // namespace degctl
