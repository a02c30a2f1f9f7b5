#include "splatlab/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "splatlab/error.hpp"

namespace splatlab {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long parse_int(const std::string& value, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0') {
    fail(ErrorKind::ParseError, "key '" + key + "': not an integer: '" + value + "'");
  }
  return v;
}

double parse_real(const std::string& value, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (errno != 0 || end == value.c_str() || *end != '\0') {
    fail(ErrorKind::ParseError, "key '" + key + "': not a number: '" + value + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  if (trim(value).empty()) return items;
  std::string current;
  for (char c : value) {
    if (c == ',') {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  items.push_back(trim(current));
  return items;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) {
      fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": empty key");
    }
    out[key] = trim(stripped.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const ConfigMap& config) {
  std::string out;
  for (const auto& [key, value] : config) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

void write_config_file(const std::string& path, const ConfigMap& config) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  out << config_to_text(config);
  out.flush();
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::string config_get(const ConfigMap& config, const std::string& key,
                       const std::string& fallback) {
  const auto it = config.find(key);
  return it == config.end() ? fallback : it->second;
}

long config_get_int(const ConfigMap& config, const std::string& key, long fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  return parse_int(it->second, key);
}

double config_get_real(const ConfigMap& config, const std::string& key, double fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  return parse_real(it->second, key);
}

bool config_get_bool(const ConfigMap& config, const std::string& key, bool fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  fail(ErrorKind::ParseError, "key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> config_get_real_list(const ConfigMap& config, const std::string& key,
                                         const std::vector<double>& fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(it->second)) out.push_back(parse_real(item, key));
  return out;
}

std::vector<long> config_get_int_list(const ConfigMap& config, const std::string& key,
                                      const std::vector<long>& fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  std::vector<long> out;
  for (const std::string& item : split_list(it->second)) out.push_back(parse_int(item, key));
  return out;
}

std::vector<std::string> config_get_string_list(const ConfigMap& config,
                                                const std::string& key,
                                                const std::vector<std::string>& fallback) {
  const auto it = config.find(key);
  if (it == config.end()) return fallback;
  return split_list(it->second);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= static_cast<std::uint64_t>(bytes[i]);
    hash *= 1099511628211ull;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open: " + path);
  std::uint64_t hash = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    hash = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), hash);
    if (!in) break;
  }
  return hash;
}

}  // namespace splatlab
