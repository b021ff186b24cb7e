#include "rlab/kvconfig.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "rlab/io.hpp"

namespace rlab::cli {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::parse_string(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
  return parse_string(io::read_file(path), path);
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto v = get(key);
  return v.has_value() ? *v : fallback;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  try {
    size_t used = 0;
    int out = std::stoi(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' must be an integer, got '" + *v + "'");
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  try {
    size_t used = 0;
    double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' must be a number, got '" + *v + "'");
  }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::runtime_error("config: key '" + key + "' must be a boolean, got '" + *v + "'");
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  try {
    size_t used = 0;
    unsigned long long out = std::stoull(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(out);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' must be an unsigned integer, got '" +
                             *v + "'");
  }
}

}  // namespace rlab::cli
