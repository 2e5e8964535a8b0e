#pragma once

#include <string>

#include "atv/config.hpp"

namespace atv {

/// Outcome of one config-driven run. Exceptions escape for environment and
/// input problems (config_error / invalid_input_error for unusable configs,
/// solver_diverged_error for blown-up iterations); a run that executes but
/// fails some of its named checks returns normally with exit_code 2.
struct RunOutcome {
  int exit_code = 0;  ///< 0 = every check passed, 2 = at least one failed
  bool checks_passed = true;
  int checks_total = 0;
  std::string report_path;  ///< empty when the config disabled the json report
  std::string summary;      ///< one terminal line describing the outcome
};

/// Executes the command named in [run] command = ... with the parameters in
/// the remaining sections. Commands: solve, verify, levelset, blowup,
/// counterexample, selftest. Unknown config keys are rejected up front.
RunOutcome run_config(const ConfigFile& cfg);
RunOutcome run(const std::string& config_path);

} // namespace atv
