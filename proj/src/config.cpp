#include "rsnn/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rsnn/errors.hpp"

namespace rsnn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#' || body[0] == ';') continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": malformed section header '" + body + "'");
      }
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      }
      bool known = false;
      for (const std::string& s : cfg.sections_) known = known || s == section;
      if (!known) cfg.sections_.push_back(section);
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + body + "'");
    }
    const std::string key_part = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key_part.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    for (char c : key_part) {
      if (!valid_key_char(c)) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad key character in '" +
                          key_part + "'");
      }
    }
    const std::string key = section.empty() ? key_part : section + "." + key_part;
    const auto it = cfg.entries_.find(key);
    if (it != cfg.entries_.end()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first set on line " + std::to_string(it->second.line) + ")");
    }
    cfg.entries_[key] = Entry{value, lineno, false};
    cfg.order_.push_back(key);
  }
  return cfg;
}

Config Config::from_map(const std::map<std::string, std::string>& entries) {
  Config cfg;
  cfg.origin_ = "<manifest>";
  for (const auto& [key, value] : entries) {
    cfg.entries_[key] = Entry{value, 0, false};
    cfg.order_.push_back(key);
  }
  return cfg;
}

const Config::Entry* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

std::string Config::describe(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return "key '" + key + "'";
  return "key '" + key + "' (" + origin_ + ":" + std::to_string(it->second.line) + ")";
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

std::string Config::need_str(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError("missing required key '" + key + "' in " + origin_);
  resolved_[key] = e->value;
  return e->value;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  const std::string value = e ? e->value : fallback;
  resolved_[key] = value;
  return value;
}

namespace {

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  if (text.empty()) throw ConfigError(what + ": expected a non-negative integer, got ''");
  char* tail = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &tail, 10);
  if (errno != 0 || tail != text.c_str() + text.size() || text[0] == '-') {
    throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  if (text.empty()) throw ConfigError(what + ": expected a number, got ''");
  char* tail = nullptr;
  const double v = std::strtod(text.c_str(), &tail);
  if (tail != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ConfigError(what + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

}  // namespace

std::size_t Config::need_size(const std::string& key) const {
  return static_cast<std::size_t>(parse_u64(need_str(key), describe(key)));
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  if (!has(key)) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  return need_size(key);
}

double Config::need_double(const std::string& key) const {
  return parse_double(need_str(key), describe(key));
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", fallback);
    resolved_[key] = buf;
    return fallback;
  }
  return need_double(key);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) {
    resolved_[key] = std::to_string(fallback);
    return fallback;
  }
  return parse_u64(need_str(key), describe(key));
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) {
    resolved_[key] = fallback ? "true" : "false";
    return fallback;
  }
  const std::string v = need_str(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(describe(key) + ": expected a boolean, got '" + v + "'");
}

void Config::override_value(const std::string& key, const std::string& value) {
  if (entries_.count(key) == 0) order_.push_back(key);
  entries_[key] = Entry{value, 0, false};
}

std::vector<std::string> Config::section_names(const std::string& prefix) const {
  std::vector<std::string> names;
  const auto add = [&names](const std::string& name) {
    if (name.empty()) return;
    for (const std::string& n : names) {
      if (n == name) return;
    }
    names.push_back(name);
  };
  // Declared headers come first so a section carrying no keys still counts;
  // key-derived names cover configs rebuilt from a manifest snapshot.
  for (const std::string& sec : sections_) {
    if (sec.rfind(prefix, 0) != 0) continue;
    const std::string rest = sec.substr(prefix.size());
    const std::size_t dot = rest.find('.');
    add(dot == std::string::npos ? rest : rest.substr(0, dot));
  }
  for (const std::string& key : order_) {
    if (key.rfind(prefix, 0) != 0) continue;
    const std::size_t dot = key.find('.', prefix.size());
    if (dot == std::string::npos) continue;
    add(key.substr(prefix.size(), dot - prefix.size()));
  }
  return names;
}

void Config::check_all_used() const {
  for (const auto& [key, entry] : entries_) {
    if (!entry.used) throw ConfigError("unknown config " + describe(key));
  }
}

}  // namespace rsnn
