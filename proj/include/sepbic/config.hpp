#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sepbic {

/// Sectioned key-value configuration:
///
///   [section]
///   key = value
///
/// Lines starting with '#' or ';' are comments. Values are stored as text;
/// numbers are written in shortest round-trip form.
class Config {
 public:
  using Section = std::map<std::string, std::string>;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;
  std::vector<std::string> sections() const;
  const Section& section(const std::string& name) const;

  std::string get(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma-separated numbers; empty text gives an empty list.
  std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
  std::vector<std::size_t> get_indices(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, std::string value);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key, long value);
  void set(const std::string& section, const std::string& key, int value) { set(section, key, static_cast<long>(value)); }
  void set(const std::string& section, const std::string& key, bool value);
  void set(const std::string& section, const std::string& key, const char* value) { set(section, key, std::string(value)); }
  void set_doubles(const std::string& section, const std::string& key, const std::vector<double>& values);
  void set_indices(const std::string& section, const std::string& key, const std::vector<std::size_t>& values);

  /// Keys of `overrides` replace or extend this config.
  void merge(const Config& overrides);

  /// FNV-1a (64 bit) of serialize().
  std::uint64_t hash() const;
  std::string hash_hex() const;

  bool operator==(const Config&) const = default;

 private:
  std::map<std::string, Section> data_;
};

/// Shortest text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& what);
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace sepbic
