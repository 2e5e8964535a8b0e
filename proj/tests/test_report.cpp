#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "atv/config.hpp"
#include "atv/report.hpp"

using namespace atv;

namespace {

ConfigFile sample_config() {
  return ConfigFile::parse("[run]\ncommand = solve\n", "inline");
}

} // namespace

TEST_CASE("document structure and key order are fixed") {
  RunReport rep("solve", sample_config());
  rep.tolerances()["gap_tol"] = 1e-5;
  rep.results()["gap"] = 2e-6;
  rep.add_check("converged", true, 2e-6, 1e-5, "<=");
  rep.set_metadata("solve_seconds", 1.25);
  auto j = rep.json();

  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"schema", "command", "config", "tolerances",
                                         "results", "checks", "passed", "metadata"});
  CHECK(j["schema"] == kReportSchema);
  CHECK(j["command"] == "solve");
  CHECK(j["config"] == "[run]\ncommand = solve\n");  // verbatim echo
  CHECK(j["checks"].size() == 1);
  CHECK(j["checks"][0]["name"] == "converged");
  CHECK(j["checks"][0]["passed"] == true);
  CHECK(j["checks"][0]["relation"] == "<=");
  CHECK(j["passed"] == true);
  CHECK(j["metadata"]["library_version"] == kLibraryVersion);
  CHECK(j["metadata"]["solve_seconds"] == 1.25);
}

TEST_CASE("one failed check flips the aggregate verdict") {
  RunReport rep("verify", sample_config());
  rep.add_check("a", true, 0.0, 1.0, "<=");
  CHECK(rep.all_passed());
  rep.add_check("b", false, 2.0, 1.0, "<=");
  rep.add_check("c", true, 0.5, 1.0, "<=");
  CHECK(!rep.all_passed());
  CHECK(rep.check_count() == 3);
  CHECK(rep.json()["passed"] == false);
}

TEST_CASE("write/load round-trips the document") {
  RunReport rep("solve", sample_config());
  rep.results()["value"] = 0.125;
  rep.add_check("ok", true, 0.125, 1.0, "<=");
  rep.write("test_report_roundtrip.json");
  auto loaded = RunReport::load("test_report_roundtrip.json");
  CHECK(loaded["results"]["value"] == 0.125);
  CHECK(loaded["checks"][0]["name"] == "ok");
  CHECK_THROWS(RunReport::load("test_report_missing.json"));
}

TEST_CASE("equivalence ignores exactly the metadata block") {
  RunReport a("solve", sample_config());
  a.results()["gap"] = 1e-6;
  a.add_check("converged", true, 1e-6, 1e-5, "<=");
  a.set_metadata("solve_seconds", 1.0);

  RunReport b("solve", sample_config());
  b.results()["gap"] = 1e-6;
  b.add_check("converged", true, 1e-6, 1e-5, "<=");
  b.set_metadata("solve_seconds", 99.0);
  b.set_metadata("extra", "noise");

  CHECK(RunReport::equivalent_modulo_metadata(a.json(), b.json()));

  RunReport c("solve", sample_config());
  c.results()["gap"] = 2e-6;  // a real payload difference
  c.add_check("converged", true, 2e-6, 1e-5, "<=");
  CHECK(!RunReport::equivalent_modulo_metadata(a.json(), c.json()));
}
