#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mbp {

/// Line-oriented `key = value` configuration. Keys may be dotted
/// (`link.alpha`), `#` starts a comment, lists are comma separated and may be
/// wrapped in brackets. Every accessor reports problems as ConfigError
/// carrying the key.
class Config {
 public:
  static Config parse(std::istream& in);
  static Config parse_string(const std::string& text);
  static Config load(const std::string& file);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_size_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

 private:
  const std::string& raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace mbp
