#include "atv/report.hpp"

#include <fstream>

#include "atv/errors.hpp"

namespace atv {

RunReport::RunReport(const std::string& command, const ConfigFile& cfg) {
  doc_["schema"] = kReportSchema;
  doc_["command"] = command;
  doc_["config"] = cfg.verbatim();
  doc_["tolerances"] = Json::object();
  doc_["results"] = Json::object();
  doc_["checks"] = Json::array();
  doc_["passed"] = true;
  doc_["metadata"] = Json::object();
  doc_["metadata"]["library_version"] = kLibraryVersion;
}

void RunReport::add_check(const std::string& name, bool passed, double value,
                          double bound, const std::string& relation) {
  Json line;
  line["name"] = name;
  line["passed"] = passed;
  line["value"] = value;
  line["relation"] = relation;
  line["bound"] = bound;
  doc_["checks"].push_back(line);
  if (!passed) all_passed_ = false;
  doc_["passed"] = all_passed_;
}

void RunReport::set_metadata(const std::string& key, const Json& value) {
  doc_["metadata"][key] = value;
}

RunReport::Json RunReport::json() const { return doc_; }

void RunReport::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input_error("cannot open report for writing: " + path);
  out << doc_.dump(2) << '\n';
}

RunReport::Json RunReport::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input_error("cannot open report: " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw invalid_input_error("report is not valid json: " + path + ": " + e.what());
  }
  return doc;
}

bool RunReport::equivalent_modulo_metadata(Json a, Json b) {
  a.erase("metadata");
  b.erase("metadata");
  return a.dump() == b.dump();
}

} // namespace atv
