#pragma once

// Round-trip number formatting and small string helpers shared by the file
// formats.

#include <charconv>
#include <cmath>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "hypgw/common.hpp"

namespace hypgw::text {

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed-point with `digits` decimals.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s == "inf") { out = INFINITY; return true; }
  if (s == "-inf") { out = -INFINITY; return true; }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

template <class Int>
inline bool parse_int(std::string_view s, Int& out) {
  s = trim(s);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

inline double to_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  if (!parse_double(s, v)) throw InvalidInput(what + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

template <class Int>
inline Int to_int(std::string_view s, const std::string& what) {
  Int v{};
  if (!parse_int(s, v)) throw InvalidInput(what + ": cannot parse integer '" + std::string(s) + "'");
  return v;
}

/// Ordered "key: value" lines. Blank lines and lines starting with '#' are
/// ignored; keys may repeat.
class Document {
 public:
  static Document parse(std::istream& is, char sep = ':') {
    Document d;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto pos = t.find(sep);
      if (pos == std::string_view::npos) {
        throw InvalidInput("line " + std::to_string(lineno) + ": expected 'key" + sep + " value'");
      }
      d.entries_.emplace_back(std::string(trim(t.substr(0, pos))), std::string(trim(t.substr(pos + 1))));
    }
    return d;
  }

  bool has(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.first == key) return true;
    return false;
  }

  const std::string& get(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.first == key) return e.second;
    throw InvalidInput("missing field '" + key + "'");
  }

  std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries_)
      if (e.first == key) out.push_back(e.second);
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Whitespace-separated numbers.
inline std::vector<double> parse_numbers(std::string_view s, const std::string& what) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(to_double(s.substr(i, j - i), what));
    i = j;
  }
  return out;
}

}  // namespace hypgw::text
