// degctl: command-line front end for static bilinear control of degenerate
// parabolic equations.
//
//   degctl spectrum   [scenario] [--coefficient D] [--modes K] [--alpha-star]
//   degctl synthesize scenario
//   degctl evolve     scenario
//   degctl verify     [scenario] [--random N]
//   degctl demo-budyko-sellers [--insolation file.csv]
//   degctl converge   scenario --cells-list 250,500 --dt-list 1e-3,2.5e-4 [--lambda2-exact 2]
//
// Global flags: --cells, --dt, --out, --no-timestamp, --seed.
// Exit status: 0 success, 1 a verification check failed, 2 input or numerical error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "degctl/degctl.hpp"

namespace fs = std::filesystem;
using namespace degctl;

namespace {

struct GlobalFlags {
  std::optional<std::size_t> cells;
  std::optional<double> dt;
  std::optional<std::string> out;
  bool no_timestamp = false;
  std::uint64_t seed = 20240521;
};

Scenario scenario_with_overrides(const std::string& path, const GlobalFlags& g) {
  Scenario s = path.empty() ? legendre_t1_scenario() : load_scenario(path);
  if (g.cells) s.n_cells = *g.cells;
  if (g.dt) s.dt = *g.dt;
  if (g.out) s.output_dir = *g.out;
  return s;
}

fs::path prepare_out(const Scenario& s) {
  fs::create_directories(s.output_dir);
  return fs::path(s.output_dir);
}

DiffusionCoefficient scenario_coefficient(const Scenario& s) {
  if (s.coefficient.rfind("table:", 0) == 0) return parse_coefficient("table:" + s.resolve(s.coefficient.substr(6)));
  return parse_coefficient(s.coefficient);
}

int cmd_spectrum(const std::string& path, const std::string& coefficient, std::size_t modes, bool alpha_star,
                 const GlobalFlags& g) {
  Scenario s = scenario_with_overrides(path, g);
  if (!coefficient.empty()) s.coefficient = coefficient;
  const auto coeff = scenario_coefficient(s);
  const Grid grid(s.n_cells);
  StateField alpha(grid);
  if (alpha_star) {
    const auto target = mollify_target(evaluate_preset(s.target_state, grid, s.base_dir), s.mollifier_delta);
    alpha = synthesize_alpha_star(coeff, target);
  }
  const auto decomp = eigendecompose(assemble(coeff, alpha, grid));
  const auto out = prepare_out(s);
  {
    std::ofstream os(out / "spectrum.csv");
    os << "k,lambda_k\n" << std::setprecision(17);
    for (std::size_t k = 0; k < decomp.size(); ++k) os << k + 1 << ',' << decomp.lambda(k) << '\n';
  }
  if (modes > 0) {
    modes = std::min(modes, decomp.size());
    std::ofstream os(out / "modes.csv");
    os << "x";
    for (std::size_t k = 0; k < modes; ++k) os << ",omega_" << k + 1;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << grid.center(i);
      for (std::size_t k = 0; k < modes; ++k) os << ',' << decomp.mode_values(k)[i];
      os << '\n';
    }
  }
  for (const auto& w : decomp.warnings()) std::cerr << "warning: " << w << '\n';
  std::cout << "lambda_1 = " << decomp.lambda(0) << ", lambda_2 = " << decomp.lambda(1)
            << ", gap = " << decomp.gap() << "  -> " << (out / "spectrum.csv").string() << '\n';
  return 0;
}

int cmd_synthesize(const std::string& path, const GlobalFlags& g) {
  const Scenario s = scenario_with_overrides(path, g);
  try {
    const auto coeff = scenario_coefficient(s);
    const Grid grid(s.n_cells);
    const auto v0 = evaluate_preset(s.initial_state, grid, s.base_dir);
    const auto raw = evaluate_preset(s.target_state, grid, s.base_dir);
    const auto plan = build_plan(coeff, v0, raw, s.epsilon, s.mode, {s.mollifier_delta, EigenSolver::Mrrr});
    const auto out = prepare_out(s);
    const auto alpha_path = out / "alpha_star.csv";
    write_field_csv(alpha_path.string(), plan.alpha_star, "alpha_star");
    Json j{{"epsilon", plan.epsilon},       {"T", plan.horizon_T},
           {"beta", plan.beta},             {"lambda1", plan.lambda1},
           {"lambda2", plan.lambda2},       {"overlap", plan.overlap},
           {"predicted_error", plan.predicted_error},
           {"alpha_star_csv_path", alpha_path.string()}};
    if (plan.clamped) j["clamped"] = true;
    if (!plan.warnings.empty()) j["warnings"] = plan.warnings;
    write_json((out / "plan.json").string(), j);
    for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << j.dump(2) << '\n';
  } catch (const Error& e) {
    rethrow_with_context(e, s);
  }
  return 0;
}

int cmd_evolve(const std::string& path, const GlobalFlags& g) {
  const Scenario s = scenario_with_overrides(path, g);
  PipelineArtifacts art;
  const auto report = run_pipeline(s, {.timestamp = false}, &art);
  const auto out = prepare_out(s);
  if (art.implicit.empty() && art.v0) art.implicit.push(0.0, *art.v0);  // clamped horizon
  {
    std::ofstream os(out / "trace.csv");
    write_trace_csv(os, art.implicit);
  }
  Json summary{{"steering_error", report.steering_error},
               {"min_value", report.min_value},
               {"b_norm", report.b_norm},
               {"gronwall_ok", report.checks.gronwall != CheckStatus::Fail},
               {"remainder_ok", report.checks.remainder != CheckStatus::Fail}};
  write_json((out / "summary.json").string(), summary);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_verify(const std::string& path, std::size_t random, const GlobalFlags& g) {
  if (random > 0) {
    SweepOptions opt;
    opt.scenarios = random;
    opt.seed = g.seed;
    if (g.cells) opt.n_cells = *g.cells;
    const auto cases = run_random_sweep(opt);
    bool ok = true;
    for (const auto& c : cases) {
      ok = ok && c.parseval_ok && c.remainder_ok && c.gronwall_ok && c.plan_identity_ok &&
           c.rayleigh_violations == 0;
    }
    Json j{{"seed", opt.seed}, {"n_cells", opt.n_cells}, {"cases", to_json(cases)}, {"passed", ok}};
    const fs::path out(g.out.value_or("out/random_sweep"));
    fs::create_directories(out);
    write_json((out / "sweep.json").string(), j);
    std::cout << "randomized sweep: " << cases.size() << " scenarios, " << (ok ? "all bounds hold" : "VIOLATION")
              << "  -> " << (out / "sweep.json").string() << '\n';
    return ok ? 0 : 1;
  }
  if (path.empty()) throw Error(ErrorCode::BadScenario, "verify needs a scenario file or --random N");
  const Scenario s = scenario_with_overrides(path, g);
  const auto report = run_pipeline(s, {.timestamp = !g.no_timestamp, .write_outputs = true});
  std::cout << to_json(report).dump(2) << '\n';
  return report.passed() ? 0 : 1;
}

int cmd_demo(const std::optional<std::string>& insolation, const GlobalFlags& g) {
  Scenario base = legendre_t1_scenario();
  base.output_dir = "out/budyko_sellers";
  if (g.cells) base.n_cells = *g.cells;
  if (g.dt) base.dt = *g.dt;
  if (g.out) base.output_dir = *g.out;
  const auto report = run_budyko_sellers_demo(insolation, {.timestamp = !g.no_timestamp, .write_outputs = true}, base);
  std::cout << to_json(report).dump(2) << '\n';
  return report.passed() ? 0 : 1;
}

std::vector<std::size_t> to_sizes(const std::vector<double>& v) {
  std::vector<std::size_t> out;
  for (double x : v) out.push_back(static_cast<std::size_t>(x));
  return out;
}

int cmd_converge(const std::string& path, const std::vector<double>& cells, const std::vector<double>& dts,
                 std::optional<double> lambda2_exact, const GlobalFlags& g) {
  const Scenario s = scenario_with_overrides(path, g);
  const auto table = run_convergence_study(s, to_sizes(cells), dts, lambda2_exact);
  const auto out = prepare_out(s);
  {
    std::ofstream os(out / "convergence.csv");
    table.write_csv(os);
  }
  table.write_csv(std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static bilinear control of strongly degenerate parabolic equations"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--cells", g.cells, "Number of grid cells (overrides the scenario)");
  app.add_option("--dt", g.dt, "Time step (overrides the scenario)");
  app.add_option("--out", g.out, "Output directory (overrides the scenario)");
  app.add_flag("--no-timestamp", g.no_timestamp, "Omit timestamp and wall-clock from reports");
  app.add_option("--seed", g.seed, "Seed for randomized property scenarios");

  std::string scenario;
  std::string coefficient;
  std::size_t modes = 0;
  bool alpha_star = false;
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues (and optionally modes) of the assembled operator");
  spectrum->add_option("scenario", scenario, "Scenario file")->check(CLI::ExistingFile);
  spectrum->add_option("--coefficient", coefficient, "legendre | power:<g> | constant:<c> | table:<path>");
  spectrum->add_option("--modes", modes, "Dump the first K modes to modes.csv");
  spectrum->add_flag("--alpha-star", alpha_star, "Use alpha_* synthesized from the scenario target");

  auto* synthesize = app.add_subcommand("synthesize", "Build the control plan (alpha_*, beta, T)");
  synthesize->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

  auto* evolve = app.add_subcommand("evolve", "Evolve under the synthesized control; trace CSV + summary");
  evolve->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);

  std::size_t random = 0;
  auto* verify = app.add_subcommand("verify", "Full pipeline with every invariant check");
  verify->add_option("scenario", scenario, "Scenario file")->check(CLI::ExistingFile);
  verify->add_option("--random", random, "Run N randomized inequality scenarios instead");

  std::optional<std::string> insolation;
  auto* demo = app.add_subcommand("demo-budyko-sellers", "Energy-balance climate demonstration");
  demo->add_option("--insolation", insolation, "Two-column (x, Q) insolation CSV");

  std::vector<double> cells_list;
  std::vector<double> dt_list;
  std::optional<double> lambda2_exact;
  auto* converge = app.add_subcommand("converge", "Grid/timestep convergence study");
  converge->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  converge->add_option("--cells-list", cells_list, "Ascending cell counts")->delimiter(',')->required();
  converge->add_option("--dt-list", dt_list, "Matching time steps")->delimiter(',')->required();
  converge->add_option("--lambda2-exact", lambda2_exact, "Known lambda_2 used as the error reference");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spectrum) return cmd_spectrum(scenario, coefficient, modes, alpha_star, g);
    if (*synthesize) return cmd_synthesize(scenario, g);
    if (*evolve) return cmd_evolve(scenario, g);
    if (*verify) return cmd_verify(scenario, random, g);
    if (*demo) return cmd_demo(insolation, g);
    if (*converge) return cmd_converge(scenario, cells_list, dt_list, lambda2_exact, g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
