#include "sepbic/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sepbic/errors.hpp"

namespace sepbic {

namespace pt = boost::property_tree;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& what) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError(what + ": '" + std::string(text) + "' is not a number");
  return v;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Config Config::parse(const std::string& text) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  Config c;
  for (const auto& [name, sec] : tree) {
    if (sec.empty()) throw ValidationError("config key '" + name + "' is outside a section");
    auto& out = c.data_[name];
    for (const auto& [key, value] : sec) out[key] = value.data();
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str());
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [name, sec] : data_) {
    if (!out.empty()) out += '\n';
    out += '[' + name + "]\n";
    for (const auto& [key, value] : sec) out += key + " = " + value + '\n';
  }
  return out;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) != 0;
}

bool Config::has_section(const std::string& section) const { return data_.count(section) != 0; }

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& kv : data_) out.push_back(kv.first);
  return out;
}

const Config::Section& Config::section(const std::string& name) const {
  static const Section empty;
  const auto it = data_.find(name);
  return it == data_.end() ? empty : it->second;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) throw ValidationError("missing config key [" + section + "] " + key);
  return data_.at(section).at(key);
}

std::string Config::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  return has(section, key) ? data_.at(section).at(key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  return parse_double(get(section, key), "[" + section + "] " + key);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int(const std::string& section, const std::string& key) const {
  const std::string s = get(section, key);
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError("[" + section + "] " + key + ": '" + s + "' is not an integer");
  return v;
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string s = get(section, key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ValidationError("[" + section + "] " + key + ": '" + s + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key) const {
  const std::string s = get(section, key);
  std::vector<double> out;
  std::size_t start = 0;
  if (s.find_first_not_of(' ') == std::string::npos) return out;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    out.push_back(parse_double(std::string_view(s).substr(start, end - start), "[" + section + "] " + key));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> Config::get_indices(const std::string& section, const std::string& key) const {
  std::vector<std::size_t> out;
  for (double v : get_doubles(section, key)) {
    if (v < 0 || v != std::floor(v)) throw ValidationError("[" + section + "] " + key + " must list non-negative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, std::string value) {
  if (section.empty() || key.empty()) throw ValidationError("config section and key must be non-empty");
  data_[section][key] = std::move(value);
}

void Config::set(const std::string& section, const std::string& key, double value) {
  set(section, key, format_double(value));
}

void Config::set(const std::string& section, const std::string& key, long value) {
  set(section, key, std::to_string(value));
}

void Config::set(const std::string& section, const std::string& key, bool value) {
  set(section, key, std::string(value ? "true" : "false"));
}

void Config::set_doubles(const std::string& section, const std::string& key, const std::vector<double>& values) {
  std::string s;
  for (std::size_t k = 0; k < values.size(); ++k) s += (k ? "," : "") + format_double(values[k]);
  set(section, key, s);
}

void Config::set_indices(const std::string& section, const std::string& key, const std::vector<std::size_t>& values) {
  std::string s;
  for (std::size_t k = 0; k < values.size(); ++k) s += (k ? "," : "") + std::to_string(values[k]);
  set(section, key, s);
}

void Config::merge(const Config& overrides) {
  for (const auto& [name, sec] : overrides.data_)
    for (const auto& [key, value] : sec) data_[name][key] = value;
}

std::uint64_t Config::hash() const { return fnv1a(serialize()); }

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

}  // namespace sepbic
