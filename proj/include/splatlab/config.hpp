#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace splatlab {

// Plain-text key=value configuration. One `key = value` pair per line; keys
// are trimmed, values keep interior whitespace but are trimmed at the ends.
// Blank lines and lines starting with '#' are ignored. A non-comment line
// without '=' is a ParseError.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::string& path);  // IoError when unreadable

// Deterministic serialization (sorted keys, one pair per line).
std::string config_to_text(const ConfigMap& config);
void write_config_file(const std::string& path, const ConfigMap& config);

// Typed lookups. The fallback is returned when the key is absent; a present
// but malformed value is a ParseError.
std::string config_get(const ConfigMap& config, const std::string& key,
                       const std::string& fallback);
long config_get_int(const ConfigMap& config, const std::string& key, long fallback);
double config_get_real(const ConfigMap& config, const std::string& key, double fallback);
bool config_get_bool(const ConfigMap& config, const std::string& key, bool fallback);

// Comma-separated lists ("0, 1, 2.5"); whitespace around elements is ignored.
// Absent key -> fallback. Empty value -> empty list.
std::vector<double> config_get_real_list(const ConfigMap& config, const std::string& key,
                                         const std::vector<double>& fallback);
std::vector<long> config_get_int_list(const ConfigMap& config, const std::string& key,
                                      const std::vector<long>& fallback);
std::vector<std::string> config_get_string_list(const ConfigMap& config,
                                                const std::string& key,
                                                const std::vector<std::string>& fallback);

// 64-bit FNV-1a (offset 14695981039346656037, prime 1099511628211), used for
// provenance input hashes. The incremental form lets callers chain buffers.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t hash = 14695981039346656037ull);
std::uint64_t fnv1a64_file(const std::string& path);  // IoError when unreadable

}  // namespace splatlab
