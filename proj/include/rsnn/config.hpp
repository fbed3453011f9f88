#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rsnn {

// Plain-text run configuration: `[section]` headers and `key = value` lines,
// full-line comments starting with '#' or ';'. Keys address as "section.key".
// Every read is recorded with its resolved value (defaults included) so a
// manifest can echo the complete effective configuration; check_all_used
// turns typos (keys never read) into errors.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin);
  // Rebuild from a manifest's resolved snapshot.
  static Config from_map(const std::map<std::string, std::string>& entries);

  bool has(const std::string& key) const;

  // Missing keys raise ConfigError naming the key; malformed values raise
  // ConfigError naming key, line, and the offending text.
  std::string need_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::size_t need_size(const std::string& key) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  double need_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Command-line overrides; recorded like file entries (line 0).
  void override_value(const std::string& key, const std::string& value);

  // Section names matching the prefix, e.g. prefix "student." lists NAME for
  // every "student.NAME.*" key, in file order of first appearance.
  std::vector<std::string> section_names(const std::string& prefix) const;

  void check_all_used() const;
  const std::map<std::string, std::string>& resolved() const { return resolved_; }
  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  const Entry* find(const std::string& key) const;
  std::string describe(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;     // insertion order of keys
  std::vector<std::string> sections_;  // declared [section] headers, file order
  mutable std::map<std::string, std::string> resolved_;
  std::string origin_ = "<empty>";
};

}  // namespace rsnn
