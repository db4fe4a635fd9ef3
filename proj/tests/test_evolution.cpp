#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "degctl/evolution.hpp"

using namespace degctl;

namespace {

const DiffusionCoefficient kLegendre = make_coefficient(kind::Legendre{});

}  // namespace

TEST(Spectral, ExactDecayOfFirstLegendreMode) {
  // v0 = x is an exact eigenvector with lambda = 2: v(t) = e^{-2t} x.
  const Grid g(200);
  const auto d = eigendecompose(assemble(kLegendre, g));
  const auto x = StateField::sample(g, [](double t) { return t; });
  const auto tr = evolve_spectral(d, 0.0, x, 1.0, g.size(), 8);
  ASSERT_EQ(tr.times.size(), 9u);
  EXPECT_EQ(tr.times.back(), 1.0);
  EXPECT_EQ(tr.states.front(), x);
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    EXPECT_NEAR(tr.l2_norms[j], std::exp(-2.0 * tr.times[j]) * l2_norm(x), 1e-12);
  }
}

TEST(Spectral, BetaShiftsGrowth) {
  const Grid g(100);
  const auto d = eigendecompose(assemble(kLegendre, g));
  const auto one = StateField::constant(g, 1.0);
  const auto tr = evolve_spectral(d, 0.7, one, 2.0, g.size(), 4);
  EXPECT_NEAR(tr.final_state()[17], std::exp(1.4), 1e-11);
}

TEST(Spectral, TruncationBound) {
  const Grid g(100);
  const auto d = eigendecompose(assemble(kLegendre, g));
  const auto v0 = StateField::sample(g, [](double x) { return std::exp(x); });
  const auto full = evolve_spectral(d, 0.0, v0, 0.5, g.size(), 4);
  const auto cut = evolve_spectral(d, 0.0, v0, 0.5, 4, 4);
  for (std::size_t j = 1; j < full.times.size(); ++j) {
    EXPECT_LE(l2_distance(full.states[j], cut.states[j]), cut.truncation_bounds[j] * (1 + 1e-12));
    EXPECT_EQ(full.truncation_bounds[j], 0.0);
  }
}

TEST(Implicit, ConvergesToSpectral) {
  const Grid g(200);
  const auto op = assemble(kLegendre, g);
  const auto d = eigendecompose(op);
  const auto v0 = StateField::sample(g, [](double x) { return 1.0 + 0.5 * x + 0.3 * x * x; });
  const auto ref = evolve_spectral(d, 0.0, v0, 1.0, g.size(), 4).final_state();
  double prev = 0.0;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const auto be = evolve_implicit(op, 0.0, v0, 1.0, dt).final_state();
    const double err = l2_distance(be, ref);
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 2.0, 0.1);  // first order
    }
    prev = err;
  }
  ImplicitOptions cn;
  cn.scheme = TimeScheme::CrankNicolson;
  const double e1 = l2_distance(evolve_implicit(op, 0.0, v0, 1.0, 1e-2, cn).final_state(), ref);
  const double e2 = l2_distance(evolve_implicit(op, 0.0, v0, 1.0, 5e-3, cn).final_state(), ref);
  EXPECT_NEAR(e1 / e2, 4.0, 0.3);  // second order
}

TEST(Implicit, StepCountAndSnapshots) {
  const Grid g(20);
  const auto op = assemble(kLegendre, g);
  const auto v0 = StateField::constant(g, 1.0);
  ImplicitOptions o;
  o.snapshots = 5;
  const auto tr = evolve_implicit(op, 0.0, v0, 0.3, 0.1, o);
  // three steps, so every step is a snapshot
  ASSERT_EQ(tr.times.size(), 4u);
  EXPECT_EQ(tr.times.back(), 0.3);
  EXPECT_NEAR(tr.times[1], 0.1, 1e-15);
  const auto zero = evolve_implicit(op, 0.0, v0, 0.0, 0.1);
  EXPECT_EQ(zero.times.size(), 1u);
}

TEST(Implicit, PositivityCertificate) {
  const Grid g(50);
  const auto op = assemble(kLegendre, StateField::constant(g, 2.0), g);
  EXPECT_DOUBLE_EQ(m_matrix_step_bound(op, 0.5), 0.4);
  ImplicitOptions o;
  o.certify_positivity = true;
  try {
    evolve_implicit(op, 0.5, StateField::constant(g, 1.0), 1.0, 0.4, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StepTooLarge);
  }
  o.scheme = TimeScheme::CrankNicolson;
  EXPECT_THROW(evolve_implicit(op, 0.5, StateField::constant(g, 1.0), 1.0, 0.1, o), Error);

  // A nonnegative bump stays nonnegative under certified backward Euler.
  o.scheme = TimeScheme::BackwardEuler;
  const auto bump = StateField::sample(g, [](double x) { return std::abs(x) < 0.2 ? 1.0 : 0.0; });
  const auto tr = evolve_implicit(op, 0.5, bump, 1.0, 0.1, o);
  EXPECT_TRUE(check_nonnegativity(tr).passed);
  EXPECT_GE(check_nonnegativity(tr).min_value, 0.0);
}

TEST(Monitors, NegativePartAndReport) {
  const Grid g(4);
  const StateField v(g, {1.0, -0.5, 0.0, -2.0});
  const auto n = negative_part(v);
  EXPECT_EQ(n, StateField(g, {0.0, 0.5, 0.0, 2.0}));
  EvolutionTrace tr;
  tr.push(0.0, v);
  const auto r = check_nonnegativity(tr);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.min_value, -2.0);
}

TEST(Monitors, GronwallEnvelope) {
  const Grid g(4);
  EvolutionTrace tr;
  tr.push(0.0, StateField::constant(g, 1.0));
  tr.push(1.0, StateField::constant(g, std::exp(0.5)));
  EXPECT_TRUE(gronwall_envelope(tr, 0.5));
  EXPECT_FALSE(gronwall_envelope(tr, 0.49));
  EXPECT_DOUBLE_EQ(control_sup(StateField(g, {0.1, -0.9, 0.3, 0.0}), 0.2), 0.7);
}

TEST(Monitors, RemainderBoundUnderControl) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const Grid g(200);
  const double a1 = u(rng), a2 = u(rng);
  const auto vd = StateField::sample(g, [&](double x) { return 1.5 + a1 * x + a2 * x * x; });
  const auto plan = build_plan(kLegendre, StateField::sample(g, [](double x) { return 1 + x; }), vd, 1e-2,
                               ControlMode::T1);
  const auto tr = evolve_spectral(*plan.spectrum, plan.beta, StateField::sample(g, [](double x) { return 1 + x; }),
                                  plan.horizon_T, g.size());
  EXPECT_TRUE(remainder_decay(*plan.spectrum, plan.beta, tr.states.front(), tr.times));
  EXPECT_TRUE(gronwall_envelope(tr, control_sup(plan.alpha_star, plan.beta)));
  // remainder at T equals the predicted error bound
  const auto r = remainder_norms(*plan.spectrum, plan.beta, tr.states.front(), {plan.horizon_T});
  EXPECT_LE(r[0], plan.predicted_error * (1 + 1e-9));
}

TEST(Monitors, BNormOfLegendreHeatFlow) {
  // v = e^{-2t} x on [0,1]: 2/3 + (2/3)(1 - e^{-4}) in the continuum.
  const Grid g(1000);
  const auto d = eigendecompose(assemble(kLegendre, g));
  const auto x = StateField::sample(g, [](double t) { return t; });
  const auto tr = evolve_spectral(d, 0.0, x, 1.0, 4, 2000);
  EXPECT_NEAR(b_norm(tr, kLegendre), 1.3211229074075105, 1e-5);
}

TEST(Monitors, SteeringError) {
  const Grid g(10);
  EvolutionTrace tr;
  tr.push(0.0, StateField::constant(g, 1.0));
  const auto t = TargetState::from_field(StateField::constant(g, 1.5));
  EXPECT_NEAR(steering_error(tr, t), 0.5 * std::sqrt(2.0), 1e-14);
  EXPECT_THROW(steering_error(EvolutionTrace{}, t), Error);
}
