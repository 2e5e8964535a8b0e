#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include "atv/config.hpp"
#include "atv/errors.hpp"
#include "atv/io.hpp"
#include "atv/report.hpp"
#include "atv/run.hpp"

using namespace atv;

namespace {

RunOutcome run_text(const std::string& text) {
  return run_config(ConfigFile::parse(text, "inline"));
}

const char* kTinySolve =
    "[run]\n"
    "command = solve\n"
    "[output]\n"
    "directory = test_run_out/solve\n"
    "fields = true\n"
    "images = true\n"
    "[grid]\n"
    "dim = 2\n"
    "n = 32\n"
    "[problem]\n"
    "mode = rof\n"
    "datum = disc\n"
    "lambda = 24\n"
    "[solver]\n"
    "gap_tol = 1e-4\n"
    "record_history = true\n";

} // namespace

TEST_CASE("solve command: converged run, artifacts, report") {
  RunOutcome out = run_text(kTinySolve);
  CHECK(out.exit_code == 0);
  CHECK(out.checks_passed);
  CHECK(out.checks_total == 2);
  CHECK(out.summary.find("solve") != std::string::npos);
  REQUIRE(out.report_path == "test_run_out/solve/solve_report.json");
  auto j = RunReport::load(out.report_path);
  CHECK(j["passed"] == true);
  CHECK(j["results"]["converged"] == true);
  CHECK(double(j["results"]["gap"]) <= 1e-4);
  CHECK(long(j["results"]["iterations"]) >= 1);

  // artifacts land next to the report and round-trip
  ScalarField u = read_scalar_field("test_run_out/solve/u.field");
  CHECK(u.grid.n[0] == 32);
  read_vector_field("test_run_out/solve/z.field");
  read_scalar_field("test_run_out/solve/g.field");
  CHECK(std::filesystem::exists("test_run_out/solve/u.pgm"));
  CHECK(std::filesystem::exists("test_run_out/solve/history.csv"));
}

TEST_CASE("an unreached tolerance is a failed check, exit code 2") {
  RunOutcome out = run_text(
      "[run]\ncommand = solve\n"
      "[output]\ndirectory = test_run_out/unconverged\n"
      "[grid]\ndim = 2\nn = 32\n"
      "[problem]\nmode = rof\ndatum = disc\nlambda = 24\n"
      "[solver]\ngap_tol = 1e-14\nmax_iters = 60\n");
  CHECK(out.exit_code == 2);
  CHECK(!out.checks_passed);
  auto j = RunReport::load(out.report_path);
  CHECK(j["results"]["converged"] == false);
  CHECK(j["passed"] == false);
}

TEST_CASE("verify command with relaxed small-grid diagnostics") {
  RunOutcome out = run_text(
      "[run]\ncommand = verify\n"
      "[output]\ndirectory = test_run_out/verify\n"
      "[grid]\ndim = 2\nn = 48\n"
      "[problem]\nmode = rof\ndatum = disc\nlambda = 24\n"
      "[solver]\ngap_tol = 1e-5\n"
      "[diagnostics]\n"
      "trace_points = 12\n"
      "blowup_radii_h = 8 4 2\n"
      "trace_tol = 0.2\n"
      "blowup_tol = 0.5\n"
      "perturbation_trials = 6\n");
  CHECK(out.exit_code == 0);
  auto j = RunReport::load(out.report_path);
  CHECK(j["results"]["boundary_points_used"] >= 8);
  CHECK(double(j["results"]["feasibility_excess"]) <= 1e-9);
  CHECK(double(j["results"]["divergence_residual_rel"]) <= 1e-10);
  CHECK(double(j["results"]["subgradient_min_slack"]) >= -1e-8);
  CHECK(std::filesystem::exists("test_run_out/verify/boundary_points.csv"));
}

TEST_CASE("levelset command on an axis-aligned interface") {
  RunOutcome out = run_text(
      "[run]\ncommand = levelset\n"
      "[output]\ndirectory = test_run_out/levelset\nimages = true\n"
      "[grid]\ndim = 2\nn = 64\n"
      "[problem]\nmode = rof\ndatum = stripe\nlambda = 16\n"
      "[solver]\ngap_tol = 1e-5\n"
      "[diagnostics]\ntrace_points = 10\ncoarea_tol = 0.05\n");
  CHECK(out.exit_code == 0);
  auto j = RunReport::load(out.report_path);
  CHECK(double(j["results"]["perimeter"]) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(double(j["results"]["density_min"]) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(double(j["results"]["coarea_defect"]) <= 1e-3);
  CHECK(double(j["results"]["binary_coarea_defect"]) <= 1e-12);
  CHECK(std::filesystem::exists("test_run_out/levelset/levelset.pbm"));
  CHECK(std::filesystem::exists("test_run_out/levelset/density.csv"));
}

TEST_CASE("blowup command reports the radius ladder") {
  RunOutcome out = run_text(
      "[run]\ncommand = blowup\n"
      "[output]\ndirectory = test_run_out/blowup\n"
      "[grid]\ndim = 2\nn = 64\n"
      "[problem]\nmode = rof\ndatum = disc\nlambda = 32\n"
      "[solver]\ngap_tol = 1e-5\n"
      "[diagnostics]\ntrace_points = 16\nblowup_radii_h = 16 8 4\nblowup_tol = 0.5\n");
  CHECK(out.exit_code == 0);
  auto j = RunReport::load(out.report_path);
  CHECK(j["results"]["radii"].size() == 3);
  CHECK(j["results"]["mean_oscillation"].size() == 3);
  CHECK(std::filesystem::exists("test_run_out/blowup/blowup.csv"));
}

TEST_CASE("counterexample command at reduced depth") {
  RunOutcome out = run_text(
      "[run]\ncommand = counterexample\n"
      "[output]\ndirectory = test_run_out/cx\n"
      "[counterexample]\ndim = 2\ndepth = 3\nquadrature_nodes = 4000\n");
  CHECK(out.exit_code == 0);
  auto j = RunReport::load(out.report_path);
  CHECK(j["results"]["radii"].size() == 3);
  CHECK(double(j["results"]["oscillation_gap"]) >= 0.015);
  CHECK(std::filesystem::exists("test_run_out/cx/averages.csv"));
}

TEST_CASE("selftest command passes and is deterministic") {
  const char* cfg =
      "[run]\ncommand = selftest\n"
      "[output]\ndirectory = test_run_out/selftest\n";
  RunOutcome a = run_text(cfg);
  CHECK(a.exit_code == 0);
  CHECK(a.checks_total >= 10);
  auto ja = RunReport::load(a.report_path);
  RunOutcome b = run_text(cfg);
  auto jb = RunReport::load(b.report_path);
  CHECK(RunReport::equivalent_modulo_metadata(ja, jb));
}

TEST_CASE("config rejection: unknown keys, bad commands, bad values") {
  CHECK_THROWS_WITH_AS(run_text("[run]\ncommand = solve\n[solver]\ngaptol = 1e-4\n"
                                "[output]\ndirectory = test_run_out/junk\n"
                                "[grid]\ndim = 2\nn = 16\n[problem]\nmode = rof\n"),
                       doctest::Contains("solver.gaptol"), config_error);
  CHECK_THROWS_AS(run_text("[output]\ndirectory = test_run_out/junk\n"), config_error);
  CHECK_THROWS_WITH_AS(run_text("[run]\ncommand = paint\n"
                                "[output]\ndirectory = test_run_out/junk\n"),
                       doctest::Contains("paint"), config_error);
  CHECK_THROWS_AS(run_text("[run]\ncommand = solve\n"
                           "[output]\ndirectory = test_run_out/junk\n"
                           "[grid]\ndim = 2\n[problem]\nmode = rof\n"),
                  config_error);  // grid.n missing
  CHECK_THROWS_AS(run_text("[run]\ncommand = counterexample\n"
                           "[output]\ndirectory = test_run_out/junk\n"
                           "[counterexample]\ndepth = 9\n"),
                  config_error);  // radii underflow
  CHECK_THROWS_AS(run_text("[run]\ncommand = solve\n"
                           "[output]\ndirectory = test_run_out/junk\n"
                           "[grid]\ndim = 2\nn = 16\n"
                           "[problem]\nmode = rof\ndatum = plasma\n"),
                  config_error);
}

TEST_CASE("blown-up iterations escape as the dedicated error") {
  CHECK_THROWS_AS(run_text("[run]\ncommand = solve\n"
                           "[output]\ndirectory = test_run_out/diverge\n"
                           "[grid]\ndim = 2\nn = 32\n"
                           "[problem]\nmode = rof\ndatum = disc\nlambda = 24\n"
                           "[solver]\nstep_scale = 4\n"),
                  solver_diverged_error);
}

TEST_CASE("prescribed-divergence run through the config layer") {
  RunOutcome out = run_text(
      "[run]\ncommand = solve\n"
      "[output]\ndirectory = test_run_out/flux\n"
      "[grid]\ndim = 2\nn = 48\n"
      "[problem]\nmode = prescribed_divergence\ndivergence_source = analytic_pair\n"
      "lambda = 32\nclamp_margin = 2\n"
      "[solver]\ngap_tol = 1e-4\n");
  CHECK(out.exit_code == 0);
  auto j = RunReport::load(out.report_path);
  CHECK(double(j["results"]["gap"]) <= 1e-4);
}
