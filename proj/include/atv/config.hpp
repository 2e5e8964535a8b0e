#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace atv {

/// Sectioned key=value configuration text:
///
///   # comment (also ; comments)
///   [section]
///   key = value
///
/// Keys are addressed as "section.key". Values keep their raw text; typed
/// accessors parse on demand and throw config_error with the offending key
/// on bad syntax. Every accessor marks its key consumed so a run can reject
/// unknown keys afterwards (assert_all_consumed), which catches typos in
/// archived configs instead of silently ignoring them.
class ConfigFile {
public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  /// Typed accessors with a required default: absent key -> default value.
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  long get_int(const std::string& key, long def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& def) const;

  /// Required accessors: absent key -> config_error naming it.
  std::string require_string(const std::string& key) const;
  double require_double(const std::string& key) const;

  /// Throws config_error listing every key no accessor ever touched.
  void assert_all_consumed() const;

  /// The file text exactly as read, for verbatim echo into reports.
  const std::string& verbatim() const { return verbatim_; }
  const std::string& origin() const { return origin_; }

private:
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> consumed_;
  std::string verbatim_;
  std::string origin_;

  const std::string* find(const std::string& key) const;
};

} // namespace atv
