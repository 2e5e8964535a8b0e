// Command-line front end: runs one config file and maps outcomes to exit
// codes that scripts can branch on.
//
//   0  run completed and every named check passed
//   1  unusable input (bad usage, unreadable/invalid config, infeasible data)
//   2  run completed but at least one named check failed
//   3  solver iteration blew up (diagnostic step sizes, broken data)

#include <cstdio>
#include <cstring>
#include <exception>
#include <string>

#include "atv/errors.hpp"
#include "atv/report.hpp"
#include "atv/run.hpp"

namespace {

const char* kUsage =
    "usage: atv <config-file>\n"
    "       atv --help | --version\n"
    "\n"
    "Runs the command named in the config's [run] section and writes a\n"
    "machine-readable report plus any requested artifacts into the\n"
    "configured output directory.\n"
    "\n"
    "Config format: sectioned key = value text ('#' comments). Sections:\n"
    "  [run]            command = solve | verify | levelset | blowup |\n"
    "                             counterexample | selftest\n"
    "  [output]         directory, json, csv, fields, images\n"
    "  [grid]           dim, n\n"
    "  [problem]        mode, anisotropy, datum, lambda, disc_center, ...\n"
    "  [solver]         max_iters, gap_tol, step_scale, ...\n"
    "  [diagnostics]    named tolerances and sampling parameters\n"
    "  [counterexample] dim, epsilon, delta, depth, quadrature_nodes, ...\n"
    "\n"
    "Unknown keys are rejected. Exit codes: 0 all checks passed, 1 unusable\n"
    "input, 2 some check failed, 3 solver divergence.\n";

} // namespace

int main(int argc, char** argv) {
  if (argc == 2 && (std::strcmp(argv[1], "--help") == 0 || std::strcmp(argv[1], "-h") == 0)) {
    std::fputs(kUsage, stdout);
    return 0;
  }
  if (argc == 2 && std::strcmp(argv[1], "--version") == 0) {
    std::printf("atv %s (report schema %s)\n", atv::kLibraryVersion, atv::kReportSchema);
    return 0;
  }
  if (argc != 2 || argv[1][0] == '\0' || argv[1][0] == '-') {
    std::fputs(kUsage, stderr);
    return 1;
  }

  try {
    atv::RunOutcome out = atv::run(argv[1]);
    std::printf("%s\n", out.summary.c_str());
    return out.exit_code;
  } catch (const atv::config_error& e) {
    std::fprintf(stderr, "atv: config error: %s\n", e.what());
    return 1;
  } catch (const atv::invalid_input_error& e) {
    std::fprintf(stderr, "atv: invalid input: %s\n", e.what());
    return 1;
  } catch (const atv::solver_diverged_error& e) {
    std::fprintf(stderr, "atv: solver diverged: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "atv: error: %s\n", e.what());
    return 1;
  }
}
