#pragma once

// Scenario-driven synthesize -> evolve -> verify pipeline, the Budyko-Sellers
// demonstration, the grid/timestep convergence study and the randomized
// inequality sweep.

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "degctl/coefficient.hpp"
#include "degctl/control.hpp"
#include "degctl/discretization.hpp"
#include "degctl/evolution.hpp"
#include "degctl/scenario.hpp"
#include "degctl/spectral.hpp"

namespace degctl {

using Json = nlohmann::ordered_json;

enum class CheckStatus { Pass, Fail, NotApplicable };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

inline CheckStatus status_of(bool ok) { return ok ? CheckStatus::Pass : CheckStatus::Fail; }

struct RunChecks {
  CheckStatus steering = CheckStatus::Fail;
  CheckStatus positivity = CheckStatus::NotApplicable;
  CheckStatus gronwall = CheckStatus::NotApplicable;
  CheckStatus remainder = CheckStatus::NotApplicable;
  CheckStatus parseval = CheckStatus::NotApplicable;
  CheckStatus plan_identity = CheckStatus::NotApplicable;
  CheckStatus integrators_agree = CheckStatus::NotApplicable;

  bool all_pass() const {
    for (auto s : {steering, positivity, gronwall, remainder, parseval, plan_identity, integrators_agree}) {
      if (s == CheckStatus::Fail) return false;
    }
    return true;
  }
};

struct RunReport {
  std::string scenario;
  std::string label;
  std::string coefficient;
  ControlMode mode = ControlMode::T1;
  std::size_t n_cells = 0;
  double h = 0.0;
  double dt = 0.0;
  std::size_t k_max = 0;

  double epsilon = 0.0;
  double horizon_T = 0.0;
  double beta = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double overlap = 0.0;
  double predicted_error = 0.0;
  double v0_norm = 0.0;
  bool clamped = false;
  std::vector<std::string> warnings;

  double steering_error = 0.0;           // backward-Euler trace
  double steering_error_spectral = 0.0;  // spectral trace
  double tolerance = 0.0;                // epsilon + c_margin h
  double integrator_gap = 0.0;           // ||spectral(T) - implicit(T)||
  double min_value = 0.0;
  double max_negative_part = 0.0;
  double parseval_defect = 0.0;
  double b_norm = 0.0;
  RunChecks checks;
  Json metadata = Json::object();

  std::optional<double> wall_clock_seconds;
  std::optional<std::string> timestamp;

  bool passed() const { return checks.all_pass(); }
};

inline Json to_json(const RunReport& r) {
  Json j;
  j["scenario"] = r.scenario;
  j["label"] = r.label;
  j["coefficient"] = r.coefficient;
  j["mode"] = to_string(r.mode);
  j["grid"] = {{"n_cells", r.n_cells}, {"h", r.h}, {"dt", r.dt}, {"k_max", r.k_max}};
  j["plan"] = {{"epsilon", r.epsilon},         {"T", r.horizon_T},
               {"beta", r.beta},               {"lambda1", r.lambda1},
               {"lambda2", r.lambda2},         {"overlap", r.overlap},
               {"predicted_error", r.predicted_error}, {"v0_norm", r.v0_norm},
               {"clamped", r.clamped},         {"warnings", r.warnings}};
  j["steering_error"] = r.steering_error;
  j["steering_error_spectral"] = r.steering_error_spectral;
  j["tolerance"] = r.tolerance;
  j["integrator_gap"] = r.integrator_gap;
  j["min_value"] = r.min_value;
  j["max_negative_part"] = r.max_negative_part;
  j["parseval_defect"] = r.parseval_defect;
  j["b_norm"] = r.b_norm;
  j["checks"] = {{"steering", to_string(r.checks.steering)},
                 {"positivity", to_string(r.checks.positivity)},
                 {"gronwall", to_string(r.checks.gronwall)},
                 {"remainder", to_string(r.checks.remainder)},
                 {"parseval", to_string(r.checks.parseval)},
                 {"plan_identity", to_string(r.checks.plan_identity)},
                 {"integrators_agree", to_string(r.checks.integrators_agree)}};
  j["passed"] = r.passed();
  if (!r.metadata.empty()) j["metadata"] = r.metadata;
  if (r.wall_clock_seconds) j["wall_clock_seconds"] = *r.wall_clock_seconds;
  if (r.timestamp) j["timestamp"] = *r.timestamp;
  return j;
}

// ---------------------------------------------------------------------------

struct PipelineArtifacts {
  std::optional<ControlPlan> plan;
  EvolutionTrace spectral;
  EvolutionTrace implicit;
  std::optional<StateField> v0;
};

struct RunOptions {
  bool timestamp = true;
  /// Write report.json, alpha_star.csv and trace.csv into the scenario's output_dir.
  bool write_outputs = false;
};

inline void write_trace_csv(std::ostream& os, const EvolutionTrace& trace) {
  os << "t,x,v\n" << std::setprecision(17);
  for (std::size_t j = 0; j < trace.states.size(); ++j) {
    const auto& s = trace.states[j];
    for (std::size_t i = 0; i < s.size(); ++i) {
      os << trace.times[j] << ',' << s.grid().center(i) << ',' << s[i] << '\n';
    }
  }
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path);
  os << j.dump(2) << '\n';
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Re-raises a module error with the scenario lines that fed the failing stage.
[[noreturn]] inline void rethrow_with_context(const Error& e, const Scenario& s) {
  std::string ctx;
  switch (e.code()) {
    case ErrorCode::NonpositiveOverlap:
    case ErrorCode::ZeroInitialState:
    case ErrorCode::NotNonnegative:
      ctx = s.where("initial_state") + ", " + s.where("target_state") + ", " + s.where("mode");
      break;
    case ErrorCode::NegativeTarget:
    case ErrorCode::DegenerateTarget:
    case ErrorCode::GroundModeMismatch:
      ctx = s.where("target_state") + ", " + s.where("mollifier_delta");
      break;
    case ErrorCode::StepTooLarge:
    case ErrorCode::SolverBreakdown:
      ctx = s.where("dt");
      break;
    case ErrorCode::TooFewCells:
      ctx = s.where("n_cells");
      break;
    case ErrorCode::NonPositiveInterior:
    case ErrorCode::BadTable:
    case ErrorCode::InconclusiveIntegrability:
      ctx = s.where("coefficient");
      break;
    default:
      ctx = s.source;
  }
  const std::string what = e.what();
  const auto colon = what.find(": ");
  throw Error(e.code(), (colon == std::string::npos ? what : what.substr(colon + 2)) + " [" + ctx + "]");
}

/// Runs plan synthesis, both integrators and every applicable check.
inline RunReport run_pipeline(const Scenario& s, const RunOptions& options = {},
                              PipelineArtifacts* artifacts = nullptr) {
  const auto started = std::chrono::steady_clock::now();
  RunReport r;
  try {
    const auto coeff = parse_coefficient(
        s.coefficient.rfind("table:", 0) == 0 ? "table:" + s.resolve(s.coefficient.substr(6)) : s.coefficient);
    const Grid grid(s.n_cells);
    const auto v0 = evaluate_preset(s.initial_state, grid, s.base_dir);
    const auto raw_target = evaluate_preset(s.target_state, grid, s.base_dir);

    auto plan = build_plan(coeff, v0, raw_target, s.epsilon, s.mode, {s.mollifier_delta, EigenSolver::Mrrr});

    r.scenario = s.name;
    r.label = s.name;
    r.coefficient = coeff.describe();
    r.mode = s.mode;
    r.n_cells = s.n_cells;
    r.h = grid.h();
    r.dt = s.dt;
    r.k_max = grid.size();
    r.epsilon = plan.epsilon;
    r.horizon_T = plan.horizon_T;
    r.beta = plan.beta;
    r.lambda1 = plan.lambda1;
    r.lambda2 = plan.lambda2;
    r.overlap = plan.overlap;
    r.predicted_error = plan.predicted_error;
    r.v0_norm = plan.v0_norm;
    r.clamped = plan.clamped;
    r.warnings = plan.warnings;
    r.tolerance = s.epsilon + s.c_margin * grid.h();
    r.parseval_defect = parseval_defect(*plan.spectrum, v0);
    r.checks.parseval = status_of(r.parseval_defect <= 1e-8 * inner_product(v0, v0));

    EvolutionTrace spectral;
    EvolutionTrace implicit;
    if (plan.clamped) {
      r.steering_error = l2_distance(v0, plan.target.field);
      r.steering_error_spectral = r.steering_error;
      r.min_value = v0.min();
    } else {
      r.checks.plan_identity = status_of(
          std::abs(plan.predicted_error - plan.epsilon) <= 1e-9 * plan.epsilon);
      spectral = evolve_spectral(*plan.spectrum, plan.beta, v0, plan.horizon_T, grid.size(), s.snapshots);
      ImplicitOptions io;
      io.certify_positivity = s.mode == ControlMode::T1;
      io.snapshots = s.snapshots;
      implicit = evolve_implicit(*plan.op, plan.beta, v0, plan.horizon_T, s.dt, io);

      r.steering_error = steering_error(implicit, plan.target);
      r.steering_error_spectral = steering_error(spectral, plan.target);
      r.integrator_gap = l2_distance(spectral.final_state(), implicit.final_state());
      r.checks.integrators_agree = status_of(r.integrator_gap <= 1e-3 * plan.v0_norm);

      const auto nn = check_nonnegativity(implicit);
      r.min_value = nn.min_value;
      r.max_negative_part = nn.max_negative_norm;
      if (s.mode == ControlMode::T1) r.checks.positivity = status_of(nn.passed);

      r.checks.gronwall = status_of(gronwall_envelope(spectral, control_sup(plan.alpha_star, plan.beta)));
      r.checks.remainder = status_of(remainder_decay(*plan.spectrum, plan.beta, v0, spectral.times));
      r.b_norm = b_norm(implicit, coeff);
    }
    r.checks.steering = status_of(r.steering_error <= r.tolerance);

    if (options.write_outputs) {
      std::filesystem::create_directories(s.output_dir);
      const std::filesystem::path out(s.output_dir);
      write_field_csv((out / "alpha_star.csv").string(), plan.alpha_star, "alpha_star");
      if (!plan.clamped) {
        std::ofstream os(out / "trace.csv");
        write_trace_csv(os, implicit);
      }
    }
    if (artifacts) *artifacts = PipelineArtifacts{std::move(plan), std::move(spectral), std::move(implicit), v0};
  } catch (const Error& e) {
    rethrow_with_context(e, s);
  }

  if (options.timestamp) {
    r.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    r.timestamp = utc_timestamp();
  }
  if (options.write_outputs) {
    write_json((std::filesystem::path(s.output_dir) / "report.json").string(), to_json(r));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Budyko-Sellers demonstration

/// The bundled T1 benchmark: Legendre coefficient, v0 = 1 + x/2, v_d = 1, eps = 1e-2.
inline Scenario legendre_t1_scenario() {
  Scenario s;
  s.name = "legendre_t1";
  s.coefficient = "legendre";
  s.initial_state = "affine:1,0.5";
  s.target_state = "const:1";
  s.epsilon = 1e-2;
  s.mode = ControlMode::T1;
  s.n_cells = 2000;
  s.dt = 1e-4;
  s.mollifier_delta = 1e-3;
  s.c_margin = 2.0;
  s.output_dir = "out/legendre_t1";
  return s;
}

/// Summary of a (x, Q(x)) insolation table; x is the sine of latitude.
inline Json read_insolation_metadata(const std::string& path) {
  std::vector<double> xs, qs;
  if (!detail::read_two_columns(path, xs, qs)) {
    throw Error(ErrorCode::BadInsolationFile, path + ": expected at least two numeric (x, Q) rows");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < -1.0 || xs[i] > 1.0 || (i > 0 && !(xs[i] > xs[i - 1]))) {
      throw Error(ErrorCode::BadInsolationFile, path + ": x must increase within [-1, 1]");
    }
    if (qs[i] < 0.0) throw Error(ErrorCode::BadInsolationFile, path + ": negative insolation");
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) integral += 0.5 * (xs[i] - xs[i - 1]) * (qs[i] + qs[i - 1]);
  return Json{{"insolation_file", std::filesystem::path(path).filename().string()},
              {"rows", xs.size()},
              {"x_min", xs.front()},
              {"x_max", xs.back()},
              {"mean_insolation", integral / (xs.back() - xs.front())}};
}

/// Controls the linear principal part u_t = ((1 - x^2) u_x)_x of the 1-D
/// energy balance model, x = sine of latitude. Insolation is metadata only.
inline RunReport run_budyko_sellers_demo(const std::optional<std::string>& insolation_csv,
                                         const RunOptions& options = {}, Scenario base = legendre_t1_scenario()) {
  Json meta = {{"model", "budyko-sellers principal part"},
               {"spatial_variable", "x = sine of latitude"},
               {"coefficient", "a(x) = 1 - x^2"}};
  if (insolation_csv) meta.update(read_insolation_metadata(*insolation_csv));
  base.name = "budyko_sellers_demo";
  auto r = run_pipeline(base, options);
  r.label = "budyko-sellers";
  r.metadata = meta;
  if (options.write_outputs) {
    write_json((std::filesystem::path(base.output_dir) / "report.json").string(), to_json(r));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
  std::size_t n_cells = 0;
  double dt = 0.0;
  double h = 0.0;
  double lambda2 = 0.0;
  double lambda2_error = 0.0;
  double lambda2_roundoff_floor = 0.0;  // 16 eps ||A||_inf
  double steering_error = 0.0;
  double integrator_gap = 0.0;          // relative to ||v0||
  std::optional<double> lambda2_order;
  std::optional<double> gap_order;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool lambda2_reference_exact = false;

  void write_csv(std::ostream& os) const {
    os << "n_cells,dt,h,lambda2,lambda2_error,lambda2_roundoff_floor,steering_error,integrator_gap,"
          "lambda2_order,gap_order\n"
       << std::setprecision(17);
    auto opt = [](const std::optional<double>& v) {
      std::ostringstream s;
      s << std::setprecision(17);
      if (v) s << *v;
      else s << "nan";
      return s.str();
    };
    for (const auto& r : rows) {
      os << r.n_cells << ',' << r.dt << ',' << r.h << ',' << r.lambda2 << ',' << r.lambda2_error << ','
         << r.lambda2_roundoff_floor << ',' << r.steering_error << ',' << r.integrator_gap << ','
         << opt(r.lambda2_order) << ',' << opt(r.gap_order) << '\n';
    }
  }
};

inline std::optional<double> observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0)) return std::nullopt;
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

/// lambda2 errors are measured against `lambda2_exact` when given, otherwise
/// against the finest row. Orders compare consecutive rows.
inline ConvergenceTable run_convergence_study(Scenario s, const std::vector<std::size_t>& n_cells_list,
                                              const std::vector<double>& dt_list,
                                              std::optional<double> lambda2_exact = std::nullopt) {
  if (n_cells_list.empty() || n_cells_list.size() != dt_list.size()) {
    throw Error(ErrorCode::InvalidParameter, "cells and dt lists must be nonempty and of equal length");
  }
  for (std::size_t i = 1; i < n_cells_list.size(); ++i) {
    if (!(n_cells_list[i] > n_cells_list[i - 1]) || !(dt_list[i] <= dt_list[i - 1])) {
      throw Error(ErrorCode::InvalidParameter, "lists must refine monotonically");
    }
  }
  ConvergenceTable table;
  table.lambda2_reference_exact = lambda2_exact.has_value();
  for (std::size_t i = 0; i < n_cells_list.size(); ++i) {
    s.n_cells = n_cells_list[i];
    s.dt = dt_list[i];
    PipelineArtifacts art;
    const auto report = run_pipeline(s, {.timestamp = false}, &art);
    ConvergenceRow row;
    row.n_cells = s.n_cells;
    row.dt = s.dt;
    row.h = report.h;
    row.lambda2 = report.lambda2;
    row.steering_error = report.steering_error;
    row.integrator_gap = report.integrator_gap / report.v0_norm;
    double norm_inf = 0.0;
    const auto& op = *art.plan->op;
    for (std::size_t k = 0; k < op.size(); ++k) {
      double row_sum = std::abs(op.diag()[k]);
      if (k > 0) row_sum += std::abs(op.offdiag()[k - 1]);
      if (k + 1 < op.size()) row_sum += std::abs(op.offdiag()[k]);
      norm_inf = std::max(norm_inf, row_sum);
    }
    row.lambda2_roundoff_floor = 16.0 * std::numeric_limits<double>::epsilon() * norm_inf;
    table.rows.push_back(row);
  }
  const double ref = lambda2_exact ? *lambda2_exact : table.rows.back().lambda2;
  for (auto& row : table.rows) row.lambda2_error = std::abs(row.lambda2 - ref);
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const auto& a = table.rows[i - 1];
    auto& b = table.rows[i];
    b.gap_order = observed_order(a.integrator_gap, b.integrator_gap, a.h, b.h);
    if (lambda2_exact || i + 1 < table.rows.size()) {
      b.lambda2_order = observed_order(a.lambda2_error, b.lambda2_error, a.h, b.h);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Randomized inequality sweep

struct SweepCase {
  std::size_t index = 0;
  ControlMode mode = ControlMode::T1;
  double parseval_defect_ratio = 0.0;  // defect / ||v||^2, worst over v0 and a random field
  bool parseval_ok = false;
  bool remainder_ok = false;
  bool gronwall_ok = false;
  std::size_t rayleigh_violations = 0;
  bool plan_identity_ok = false;
};

struct SweepOptions {
  std::size_t scenarios = 20;
  std::size_t n_cells = 500;
  std::size_t rayleigh_fields = 200;
  std::uint64_t seed = 20240521;
};

namespace detail {

// Strictly positive smooth profile 1.5 + sum_m a_m cos(m pi x / 2 + phi_m), |a_m| <= 0.4.
inline std::function<double(double)> random_positive_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-0.4, 0.4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::array<double, 3> a{amp(rng), amp(rng), amp(rng)};
  std::array<double, 3> p{phase(rng), phase(rng), phase(rng)};
  return [a, p](double x) {
    double v = 1.5;
    for (int m = 0; m < 3; ++m) v += a[m] * std::cos((m + 1) * std::numbers::pi * x / 2.0 + p[m]);
    return v;
  };
}

}  // namespace detail

inline std::vector<SweepCase> run_random_sweep(const SweepOptions& opt, double epsilon = 1e-2) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Grid grid(opt.n_cells);
  const auto coeff = make_coefficient(kind::Legendre{});
  std::vector<SweepCase> out;

  for (std::size_t c = 0; c < opt.scenarios; ++c) {
    SweepCase sc;
    sc.index = c;
    sc.mode = c % 2 == 0 ? ControlMode::T1 : ControlMode::C1;
    const auto target = StateField::sample(grid, detail::random_positive_profile(rng));
    StateField v0(grid);
    if (sc.mode == ControlMode::T1) {
      const auto f = detail::random_positive_profile(rng);
      const double scale = 0.2 + 2.0 * unit(rng);
      v0 = StateField::sample(grid, [&](double x) { return scale * f(x); });
    } else {
      // Sign-changing initial state, redrawn until the overlap is clearly positive.
      do {
        const double offset = 0.3 + 0.5 * unit(rng);
        const double slope = (unit(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + unit(rng));
        v0 = StateField::sample(grid, [&](double x) { return offset + slope * x; });
      } while (inner_product(v0, target) < 0.05 * l2_norm(v0) * l2_norm(target));
    }
    const auto plan = build_plan(coeff, v0, target, epsilon, sc.mode, {1e-3, EigenSolver::Mrrr});
    const auto& eig = *plan.spectrum;

    StateField noise(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) noise[i] = gauss(rng);
    sc.parseval_defect_ratio = std::max(parseval_defect(eig, v0) / inner_product(v0, v0),
                                        parseval_defect(eig, noise) / inner_product(noise, noise));
    sc.parseval_ok = sc.parseval_defect_ratio <= 1e-8;

    const auto trace = evolve_spectral(eig, plan.beta, v0, plan.horizon_T, eig.size());
    sc.remainder_ok = remainder_decay(eig, plan.beta, v0, trace.times);
    sc.gronwall_ok = gronwall_envelope(trace, control_sup(plan.alpha_star, plan.beta));
    sc.plan_identity_ok =
        plan.clamped || std::abs(plan.predicted_error - plan.epsilon) <= 1e-9 * plan.epsilon;

    for (std::size_t f = 0; f < opt.rayleigh_fields; ++f) {
      StateField u(grid);
      if (f % 2 == 0) {
        for (std::size_t i = 0; i < grid.size(); ++i) u[i] = gauss(rng);
      } else {
        const auto g = detail::random_positive_profile(rng);
        const double shift = gauss(rng);
        u = StateField::sample(grid, [&](double x) { return g(x) + shift; });
      }
      if (!rayleigh_check(coeff, plan.alpha_star, u)) ++sc.rayleigh_violations;
    }
    out.push_back(sc);
  }
  return out;
}

inline Json to_json(const std::vector<SweepCase>& cases) {
  Json arr = Json::array();
  for (const auto& c : cases) {
    arr.push_back({{"index", c.index},
                   {"mode", to_string(c.mode)},
                   {"parseval_defect_ratio", c.parseval_defect_ratio},
                   {"parseval_ok", c.parseval_ok},
                   {"remainder_ok", c.remainder_ok},
                   {"gronwall_ok", c.gronwall_ok},
                   {"rayleigh_violations", c.rayleigh_violations},
                   {"plan_identity_ok", c.plan_identity_ok}});
  }
  return arr;
}

}  // namespace degctl
