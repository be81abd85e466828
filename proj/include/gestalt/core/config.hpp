#ifndef GESTALT_CORE_CONFIG_HPP_
#define GESTALT_CORE_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"

namespace gestalt {

/// Run configuration parsed from a plain text file.
///
/// Grammar: one `key = value` pair per line; keys are dotted lowercase
/// identifiers; values are scalars or comma-separated lists; blank lines
/// and lines starting with '#' are ignored. Values keep everything after
/// the first '=' (trimmed), so paths may contain spaces.
class Config {
public:
  Config() = default;

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  static Config parse(const std::string& text, const std::string& name = "<config>") {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ParseError(name + ":" + std::to_string(lineno) +
                         ": expected 'key = value'");
      const std::string key = trim(t.substr(0, eq));
      const std::string val = trim(t.substr(eq + 1));
      if (key.empty())
        throw ParseError(name + ":" + std::to_string(lineno) + ": empty key");
      cfg.kv_[key] = val;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw DataError("missing config key: " + key);
    return it->second;
  }

  std::string str(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
  }

  double num(const std::string& key, double def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    return parse_num(key, it->second);
  }

  double num(const std::string& key) const { return parse_num(key, str(key)); }

  std::int64_t integer(const std::string& key, std::int64_t def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    return parse_int(key, it->second);
  }

  bool boolean(const std::string& key, bool def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ParseError("config key " + key + ": expected boolean, got '" + v + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    std::istringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : list(key))
      out.push_back(static_cast<int>(parse_int(key, s)));
    return out;
  }

  void set(const std::string& key, const std::string& val) { kv_[key] = val; }

  /// Canonical text form (keys sorted); embedded in reports and run dirs so
  /// every artifact carries the exact configuration that produced it.
  std::string snapshot() const {
    std::ostringstream out;
    for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
    return out.str();
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static double parse_num(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ParseError("config key " + key + ": expected number, got '" + v + "'");
    }
  }

  static std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      long long i = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return i;
    } catch (const std::exception&) {
      throw ParseError("config key " + key + ": expected integer, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace gestalt

#endif  // GESTALT_CORE_CONFIG_HPP_
