#pragma once

// Flat `key = value` config files: dotted prefixes group related keys,
// `#` starts a comment, blank lines are ignored. Every key must be consumed
// by the run that reads it; leftovers are reported as errors so typos never
// silently fall back to defaults.

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modclock {

// configuration problems map to exit code 2 at the command line
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap from_text(const std::string& text, const std::string& origin = "<text>") {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string body = detail::trim(line);
      if (body.empty()) continue;
      std::size_t eq = body.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = detail::trim(body.substr(0, eq));
      std::string value = detail::trim(body.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static ConfigMap from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str(), path);
  }

  // command-line overrides land on top of the file values
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const char* s = it->second.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
      throw ConfigError("key " + key + ": not a number: " + it->second);
    return v;
  }

  int get_int(const std::string& key, int fallback) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const char* s = it->second.c_str();
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end == s || *end != '\0')
      throw ConfigError("key " + key + ": not an integer: " + it->second);
    return static_cast<int>(v);
  }

  // keys present in the file that nothing asked for
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key)) out.push_back(key);
    return out;
  }

  void reject_unused() const {
    std::vector<std::string> stray = unused_keys();
    if (stray.empty()) return;
    std::string msg = "unknown config keys:";
    for (const std::string& k : stray) msg += " " + k;
    throw ConfigError(msg);
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

}  // namespace modclock
