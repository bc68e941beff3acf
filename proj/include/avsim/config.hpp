#pragma once

// Structured text config: `[section]` headers followed by `key = value` lines.
// '#' and ';' start comments at the beginning of a line. Sections may repeat
// (one [actor] block per actor, for example).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace avsim {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline double to_double(std::string_view s, const std::string& where) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(where + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

class IniSection {
 public:
  IniSection(std::string name, int line) : name_(std::move(name)), line_(line) {}

  const std::string& name() const { return name_; }
  int line() const { return line_; }

  void add(std::string key, std::string value, int line) {
    if (has(key)) throw ConfigError(where_line(line) + ": duplicate key '" + key + "'");
    entries_.push_back({std::move(key), std::move(value), line});
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  std::string get_string(std::string_view key) const {
    const Entry* e = find(key);
    if (!e) throw ConfigError("[" + name_ + "] (line " + std::to_string(line_) + "): missing key '" + std::string(key) + "'");
    return e->value;
  }
  std::string get_string(std::string_view key, std::string fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(std::string_view key) const { return detail::to_double(get_string(key), where(key)); }
  double get_double(std::string_view key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  int get_int(std::string_view key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = get_double(key);
    if (v != std::floor(v)) throw ConfigError(where(key) + ": expected an integer");
    return static_cast<int>(v);
  }

  bool get_bool(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where(key) + ": expected true/false");
  }

  /// Whitespace-separated numbers, e.g. "0.1 0.2 0.3".
  std::vector<double> get_numbers(std::string_view key) const {
    std::vector<double> out;
    const std::string text = get_string(key);
    for (auto tok : detail::split_ws(text)) out.push_back(detail::to_double(tok, where(key)));
    return out;
  }

  /// Semicolon-separated tuples of whitespace-separated numbers, e.g. "0 0; 1 0; 1 1".
  std::vector<std::vector<double>> get_tuples(std::string_view key) const {
    std::vector<std::vector<double>> out;
    const std::string text = get_string(key);
    for (auto part : detail::split(text, ';')) {
      if (part.empty()) continue;
      std::vector<double> t;
      for (auto tok : detail::split_ws(part)) t.push_back(detail::to_double(tok, where(key)));
      out.push_back(std::move(t));
    }
    return out;
  }

  /// Rejects keys outside `allowed` so typos do not silently fall back to defaults.
  void require_known(std::initializer_list<std::string_view> allowed) const {
    for (const auto& e : entries_)
      if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
        throw ConfigError(where_line(e.line) + ": unknown key '" + e.key + "' in [" + name_ + "]");
  }

 private:
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };

  const Entry* find(std::string_view key) const {
    for (const auto& e : entries_)
      if (e.key == key) return &e;
    return nullptr;
  }

  std::string where(std::string_view key) const {
    const Entry* e = find(key);
    return "[" + name_ + "] " + std::string(key) + " (line " + std::to_string(e ? e->line : line_) + ")";
  }
  std::string where_line(int line) const { return "line " + std::to_string(line); }

  std::string name_;
  int line_;
  std::vector<Entry> entries_;
};

class IniDocument {
 public:
  static IniDocument parse(std::string_view text) {
    IniDocument doc;
    int line_no = 0;
    while (!text.empty()) {
      const std::size_t nl = text.find('\n');
      const std::string_view raw = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      const std::string_view line = detail::trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
        doc.sections_.emplace_back(std::string(detail::trim(line.substr(1, line.size() - 2))), line_no);
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      if (doc.sections_.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
      doc.sections_.back().add(std::string(detail::trim(line.substr(0, eq))),
                               std::string(detail::trim(line.substr(eq + 1))), line_no);
    }
    return doc;
  }

  static IniDocument load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      return parse(ss.str());
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }

  /// First section with this name, or nullptr.
  const IniSection* find(std::string_view name) const {
    for (const auto& s : sections_)
      if (s.name() == name) return &s;
    return nullptr;
  }

  std::vector<const IniSection*> all(std::string_view name) const {
    std::vector<const IniSection*> out;
    for (const auto& s : sections_)
      if (s.name() == name) out.push_back(&s);
    return out;
  }

  const std::vector<IniSection>& sections() const { return sections_; }

 private:
  std::vector<IniSection> sections_;
};

}  // namespace avsim
