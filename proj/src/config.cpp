#include "atv/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "atv/errors.hpp"

namespace atv {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

} // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.verbatim_ = text;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string where = origin + ":" + std::to_string(lineno);
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw config_error(where + ": unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_name(section)) throw config_error(where + ": bad section name");
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error(where + ": expected key = value, got: " + s);
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    // strip a trailing comment, but only one separated by whitespace so
    // values may still contain '#'-free prose
    std::size_t hash = value.find(" #");
    if (hash == std::string::npos) hash = value.find("\t#");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    if (!valid_name(key)) throw config_error(where + ": bad key name: " + key);
    if (section.empty()) throw config_error(where + ": key before any [section]");
    std::string full = section + "." + key;
    if (cfg.entries_.count(full)) throw config_error(where + ": duplicate key: " + full);
    cfg.entries_[full] = value;
  }
  return cfg;
}

const std::string* ConfigFile::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& def) const {
  const std::string* v = find(key);
  return v ? *v : def;
}

double ConfigFile::get_double(const std::string& key, double def) const {
  const std::string* v = find(key);
  if (!v) return def;
  const char* begin = v->c_str();
  char* end = nullptr;
  double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw config_error(origin_ + ": key " + key + ": not a number: " + *v);
  return x;
}

long ConfigFile::get_int(const std::string& key, long def) const {
  const std::string* v = find(key);
  if (!v) return def;
  const char* begin = v->c_str();
  char* end = nullptr;
  long x = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw config_error(origin_ + ": key " + key + ": not an integer: " + *v);
  return x;
}

bool ConfigFile::get_bool(const std::string& key, bool def) const {
  const std::string* v = find(key);
  if (!v) return def;
  std::string s = *v;
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw config_error(origin_ + ": key " + key + ": not a boolean: " + *v);
}

std::vector<double> ConfigFile::get_double_list(const std::string& key,
                                                const std::vector<double>& def) const {
  const std::string* v = find(key);
  if (!v) return def;
  std::vector<double> out;
  std::string item;
  std::istringstream in(*v);
  while (in >> item) {
    if (!item.empty() && item.back() == ',') item.pop_back();
    if (item.empty()) continue;
    const char* begin = item.c_str();
    char* end = nullptr;
    double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
      throw config_error(origin_ + ": key " + key + ": not a number list entry: " + item);
    out.push_back(x);
  }
  if (out.empty())
    throw config_error(origin_ + ": key " + key + ": empty number list");
  return out;
}

std::string ConfigFile::require_string(const std::string& key) const {
  const std::string* v = find(key);
  if (!v) throw config_error(origin_ + ": missing required key: " + key);
  return *v;
}

double ConfigFile::require_double(const std::string& key) const {
  if (!has(key)) throw config_error(origin_ + ": missing required key: " + key);
  return get_double(key, 0.0);
}

void ConfigFile::assert_all_consumed() const {
  std::string unknown;
  for (const auto& [key, value] : entries_)
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!unknown.empty())
    throw config_error(origin_ + ": unknown keys (typo?): " + unknown);
}

} // namespace atv
