#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "degctl/degctl.hpp"

using namespace degctl;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = DEGCTL_SCENARIO_DIR;
const std::string kCli = DEGCTL_CLI;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "case.cfg");
}

Scenario small_t1() {
  Scenario s = legendre_t1_scenario();
  s.n_cells = 200;
  s.dt = 1e-3;
  return s;
}

}  // namespace

TEST(Scenario, ParsesBundledFiles) {
  const auto s = load_scenario(kScenarios + "/legendre_t1.cfg");
  EXPECT_EQ(s.name, "legendre_t1");
  EXPECT_EQ(s.initial_state, "affine:1,0.5");
  EXPECT_EQ(s.mode, ControlMode::T1);
  EXPECT_EQ(s.n_cells, 2000u);
  EXPECT_DOUBLE_EQ(s.c_margin, 2.0);
  EXPECT_EQ(load_scenario(kScenarios + "/legendre_c1_signchange.cfg").mode, ControlMode::C1);
}

TEST(Scenario, ErrorsCarryLineNumbers) {
  try {
    parse("coefficient = legendre\n\n# comment\nepsilon = abc\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadScenario);
    EXPECT_NE(std::string(e.what()).find("case.cfg:4"), std::string::npos) << e.what();
  }
  try {
    parse("colour = blue\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("case.cfg:1"), std::string::npos);
  }
  EXPECT_THROW(parse("dt = -1\n"), Error);
  EXPECT_THROW(parse("mode = T2\n"), Error);
  EXPECT_THROW(parse("epsilon\n"), Error);
  EXPECT_THROW(load_scenario("/nonexistent/x.cfg"), Error);
}

TEST(Scenario, Presets) {
  const Grid g(100);
  const auto c = evaluate_preset("const:2.5", g);
  EXPECT_EQ(c.min(), 2.5);
  const auto a = evaluate_preset("affine:1,0.5", g);
  EXPECT_DOUBLE_EQ(a[0], 1.0 + 0.5 * g.center(0));
  const auto b = evaluate_preset("bump:0.2,0.6", g);
  EXPECT_EQ(b[0], 0.0);
  EXPECT_NEAR(b.max(), 1.0, 1e-3);
  EXPECT_THROW(evaluate_preset("bump:0,0", g), Error);
  EXPECT_THROW(evaluate_preset("gauss:1", g), Error);
  EXPECT_THROW(evaluate_preset("const", g), Error);

  const auto path = fs::temp_directory_path() / "degctl_state.csv";
  {
    std::ofstream os(path);
    os << "x,v\n-1,0\n1,2\n";
  }
  const auto f = evaluate_preset("csv:" + path.string(), g);
  EXPECT_NEAR(f[10], 1.0 + g.center(10), 1e-14);
  fs::remove(path);
}

TEST(Scenario, ErrorContextNamesTheLine) {
  auto s = parse("initial_state = affine:0,1\nmode = C1\nn_cells = 100\n");
  try {
    run_pipeline(s, {.timestamp = false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonpositiveOverlap);
    EXPECT_NE(std::string(e.what()).find("case.cfg:1 (initial_state)"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, SmallT1RunPassesEveryCheck) {
  const auto r = run_pipeline(small_t1(), {.timestamp = false});
  EXPECT_TRUE(r.passed()) << to_json(r).dump(2);
  EXPECT_EQ(r.checks.positivity, CheckStatus::Pass);
  EXPECT_NEAR(r.horizon_T, 2.4958825650524161, 1e-5);
  EXPECT_LE(r.steering_error, r.tolerance);
  EXPECT_FALSE(to_json(r).contains("timestamp"));
  EXPECT_FALSE(to_json(r).contains("wall_clock_seconds"));
}

TEST(Pipeline, TimestampedReportHasWallClock) {
  const auto j = to_json(run_pipeline(small_t1()));
  EXPECT_TRUE(j.contains("timestamp"));
  EXPECT_TRUE(j.contains("wall_clock_seconds"));
}

TEST(Pipeline, C1PositivityNotApplicable) {
  auto s = small_t1();
  s.initial_state = "affine:0.3,1";
  s.mode = ControlMode::C1;
  PipelineArtifacts art;
  const auto r = run_pipeline(s, {.timestamp = false}, &art);
  EXPECT_EQ(r.checks.positivity, CheckStatus::NotApplicable);
  EXPECT_LT(r.min_value, 0.0);
  EXPECT_TRUE(r.passed()) << to_json(r).dump(2);
  ASSERT_TRUE(art.plan.has_value());
  EXPECT_EQ(art.spectral.times.size(), 65u);
}

TEST(Pipeline, ClampedHorizonReportsInitialMismatch) {
  auto s = small_t1();
  s.initial_state = "const:1.001";
  s.epsilon = 2.0;
  const auto r = run_pipeline(s, {.timestamp = false});
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.horizon_T, 0.0);
  EXPECT_EQ(r.checks.plan_identity, CheckStatus::NotApplicable);
  EXPECT_NEAR(r.steering_error, 1e-3 * std::sqrt(2.0), 1e-12);
}

TEST(Pipeline, WritesOutputs) {
  auto s = small_t1();
  s.output_dir = (fs::temp_directory_path() / "degctl_pipeline_out").string();
  fs::remove_all(s.output_dir);
  run_pipeline(s, {.timestamp = false, .write_outputs = true});
  const fs::path out(s.output_dir);
  ASSERT_TRUE(fs::exists(out / "report.json"));
  const auto alpha = read_field_csv((out / "alpha_star.csv").string());
  EXPECT_EQ(alpha.size(), 200u);
  const auto report = Json::parse(slurp(out / "report.json"));
  EXPECT_TRUE(report["passed"].get<bool>());
  EXPECT_EQ(slurp(out / "trace.csv").rfind("t,x,v\n", 0), 0u);
  fs::remove_all(out);
}

TEST(Pipeline, CsvRoundTripOfAlphaStar) {
  const Grid g(256);
  const auto plan = build_plan(make_coefficient(kind::Legendre{}), StateField::constant(g, 1.0),
                               evaluate_preset("affine:2,1", g), 1e-2, ControlMode::T1);
  std::stringstream ss;
  write_field_csv(ss, plan.alpha_star, "alpha_star");
  EXPECT_EQ(read_field_csv(ss), plan.alpha_star);
}

TEST(Insolation, MetadataAndErrors) {
  const auto meta = read_insolation_metadata(kScenarios + "/insolation_sample.csv");
  EXPECT_EQ(meta["rows"].get<std::size_t>(), 21u);
  // mean of 342 (1 - 0.482 P2) over [-1, 1] is 342, up to the trapezoid error
  EXPECT_NEAR(meta["mean_insolation"].get<double>(), 342.0, 2.0);

  const auto bad = fs::temp_directory_path() / "degctl_bad_insolation.csv";
  {
    std::ofstream os(bad);
    os << "x,Q\n0.5,300\n0.1,200\n";
  }
  try {
    read_insolation_metadata(bad.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadInsolationFile);
  }
  {
    std::ofstream os(bad);
    os << "latitude\nnorth\n";
  }
  EXPECT_THROW(read_insolation_metadata(bad.string()), Error);
  fs::remove(bad);
}

TEST(Insolation, DemoCarriesMetadata) {
  Scenario base = small_t1();
  const auto r = run_budyko_sellers_demo(kScenarios + "/insolation_sample.csv", {.timestamp = false}, base);
  EXPECT_EQ(r.label, "budyko-sellers");
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.metadata["insolation_file"], "insolation_sample.csv");
}

TEST(Convergence, SingleRowTable) {
  const auto t = run_convergence_study(small_t1(), {200}, {1e-3}, 2.0);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_FALSE(t.rows[0].lambda2_order.has_value());
  EXPECT_FALSE(t.rows[0].gap_order.has_value());
  EXPECT_LE(t.rows[0].lambda2_error, t.rows[0].lambda2_roundoff_floor);
  std::ostringstream os;
  t.write_csv(os);
  EXPECT_NE(os.str().find(",nan,nan\n"), std::string::npos);
  EXPECT_THROW(run_convergence_study(small_t1(), {200, 100}, {1e-3, 1e-3}), Error);
  EXPECT_THROW(run_convergence_study(small_t1(), {200}, {}), Error);
}

TEST(Convergence, ObservedOrder) {
  EXPECT_NEAR(*observed_order(4e-2, 1e-2, 0.2, 0.1), 2.0, 1e-12);
  EXPECT_FALSE(observed_order(0.0, 1e-2, 0.2, 0.1).has_value());
}

TEST(Sweep, SmallSweepIsClean) {
  SweepOptions opt;
  opt.scenarios = 4;
  opt.n_cells = 100;
  opt.rayleigh_fields = 20;
  const auto cases = run_random_sweep(opt);
  ASSERT_EQ(cases.size(), 4u);
  for (const auto& c : cases) {
    EXPECT_TRUE(c.parseval_ok && c.remainder_ok && c.gronwall_ok && c.plan_identity_ok);
    EXPECT_EQ(c.rayleigh_violations, 0u);
  }
  EXPECT_EQ(to_json(cases).dump(), to_json(run_random_sweep(opt)).dump());
}

TEST(Cli, DeterministicReportsWithoutTimestamp) {
  const fs::path base = fs::temp_directory_path() / "degctl_cli_det";
  fs::remove_all(base);
  const std::string cfg = kScenarios + "/legendre_t1.cfg";
  for (const char* run_dir : {"a", "b"}) {
    const std::string cmd = kCli + " verify " + cfg + " --cells 200 --dt 1e-3 --no-timestamp --out " +
                            (base / run_dir).string();
    ASSERT_EQ(run(cmd), 0) << cmd;
  }
  const auto a = slurp(base / "a" / "report.json");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(base / "b" / "report.json"));
  EXPECT_EQ(a.find("timestamp"), std::string::npos);
  EXPECT_EQ(slurp(base / "a" / "trace.csv"), slurp(base / "b" / "trace.csv"));
  fs::remove_all(base);
}

TEST(Cli, SubcommandsAndExitCodes) {
  const fs::path out = fs::temp_directory_path() / "degctl_cli_sub";
  fs::remove_all(out);
  const std::string cfg = kScenarios + "/legendre_t1.cfg";
  const std::string flags = " --cells 200 --dt 1e-3 --no-timestamp --out " + out.string();

  EXPECT_EQ(run(kCli + " synthesize " + cfg + flags), 0);
  const auto plan = Json::parse(slurp(out / "plan.json"));
  for (const char* key : {"epsilon", "T", "beta", "lambda1", "lambda2", "overlap", "predicted_error",
                          "alpha_star_csv_path"}) {
    EXPECT_TRUE(plan.contains(key)) << key;
  }

  EXPECT_EQ(run(kCli + " evolve " + cfg + flags), 0);
  const auto summary = Json::parse(slurp(out / "summary.json"));
  EXPECT_TRUE(summary["gronwall_ok"].get<bool>());
  EXPECT_TRUE(summary["remainder_ok"].get<bool>());

  EXPECT_EQ(run(kCli + " spectrum --coefficient legendre --modes 3" + flags), 0);
  EXPECT_EQ(slurp(out / "spectrum.csv").rfind("k,lambda_k\n1,", 0), 0u);
  EXPECT_EQ(slurp(out / "modes.csv").rfind("x,omega_1,omega_2,omega_3\n", 0), 0u);

  EXPECT_EQ(run(kCli + " converge " + cfg + " --cells-list 100,200 --dt-list 4e-3,1e-3 --lambda2-exact 2" +
                " --out " + out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "convergence.csv"));

  EXPECT_EQ(run(kCli + " verify " + kScenarios + "/legendre_c1_orthogonal.cfg --out " + out.string()), 2);
  EXPECT_EQ(run(kCli + " verify " + cfg + " --cells 2 --out " + out.string()), 2);
  fs::remove_all(out);
}
