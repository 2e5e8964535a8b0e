#pragma once

#include <string>

#include <json.hpp>

#include "atv/config.hpp"

namespace atv {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kReportSchema = "atv-report/1";

/// Builder for the machine-readable run report. Everything outside the
/// metadata block is a pure function of the config, so two runs of the same
/// config serialize bit-identically once metadata is dropped (wall times and
/// timestamps live only there). Key order is insertion order, fixed by the
/// code paths that fill the report.
class RunReport {
public:
  using Json = nlohmann::ordered_json;

  RunReport(const std::string& command, const ConfigFile& cfg);

  /// Command-specific numeric payload (free-form tree).
  Json& results() { return doc_["results"]; }
  /// Every tolerance the run compared against, by name.
  Json& tolerances() { return doc_["tolerances"]; }

  /// One named pass/fail line: value `relation` bound (relation is "<=",
  /// ">=", or "==", documentation only - passed is decided by the caller).
  void add_check(const std::string& name, bool passed, double value, double bound,
                 const std::string& relation);
  bool all_passed() const { return all_passed_; }
  int check_count() const { return static_cast<int>(doc_["checks"].size()); }

  /// Nondeterministic annotations (timestamps, wall times); excluded from
  /// equivalence comparison.
  void set_metadata(const std::string& key, const Json& value);

  Json json() const;
  void write(const std::string& path) const;

  static Json load(const std::string& path);
  /// Bit-level equality of the serialized documents after erasing metadata.
  static bool equivalent_modulo_metadata(Json a, Json b);

private:
  Json doc_;
  bool all_passed_ = true;
};

} // namespace atv
