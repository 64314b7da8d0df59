#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace entroherd {

// Flat key=value config text. Lines are `key = value`; `#` starts a comment;
// blank lines ignored. Values keep internal whitespace, ends trimmed.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void set_double(const std::string& key, double v);
  void set_int(const std::string& key, long long v);
  void set_bool(const std::string& key, bool v);

  // Typed getters throw ConfigError naming the offending key.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

std::string format_double(double v);  // round-trip safe "%.17g"
std::string join_doubles(const std::vector<double>& v);
std::vector<double> parse_double_list(const std::string& s, const std::string& what);

}  // namespace entroherd
