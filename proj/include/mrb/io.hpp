// Copyright (c) 2026 The billiards developers
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mrb/errors.hpp"
#include "mrb/geometry.hpp"
#include "mrb/rational.hpp"

namespace mrb {
namespace io {

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numeric literal of the description files: integer, fraction p/q, decimal,
/// or (rational factor *) sqrt(integer). The rational part is kept exact so
/// that side ratios entered as fractions are recognized without
/// floating-point equality tests.
struct ParsedValue {
  double value = 0.0;
  std::optional<Rational> rational;  ///< exact value when sqrt_arg == 1
  std::int64_t sqrt_arg = 1;         ///< value = rational * sqrt(sqrt_arg)
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

inline Rational parse_rational_token(const std::string& tok) {
  const std::size_t slash = tok.find('/');
  if (slash != std::string::npos) {
    const std::int64_t p = std::stoll(tok.substr(0, slash));
    const std::int64_t q = std::stoll(tok.substr(slash + 1));
    return Rational::of(p, q);
  }
  const std::size_t dot = tok.find('.');
  if (dot == std::string::npos) return Rational::of(std::stoll(tok), 1);
  std::string digits = tok.substr(0, dot) + tok.substr(dot + 1);
  const int frac_digits = static_cast<int>(tok.size() - dot - 1);
  if (frac_digits > 12 || digits.size() > 17) throw ConfigError("decimal too long for exact parse: " + tok);
  std::int64_t den = 1;
  for (int i = 0; i < frac_digits; ++i) den *= 10;
  return Rational::of(std::stoll(digits), den);
}

}  // namespace detail

inline ParsedValue parse_value(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw ConfigError("empty numeric value");

  ParsedValue v;
  std::string rational_part = s;
  const std::size_t sq = s.find("sqrt(");
  if (sq != std::string::npos) {
    if (s.back() != ')') throw ConfigError("malformed sqrt term: " + raw);
    v.sqrt_arg = std::stoll(s.substr(sq + 5, s.size() - sq - 6));
    if (v.sqrt_arg < 1) throw ConfigError("sqrt argument must be positive: " + raw);
    rational_part = s.substr(0, sq);
    if (!rational_part.empty() && rational_part.back() == '*') rational_part.pop_back();
    if (rational_part.empty()) rational_part = "1";
    // pull square factors out so sqrt(4) and sqrt(8) get exact rational parts
    std::int64_t root = 1;
    for (std::int64_t f = 2; f * f <= v.sqrt_arg; ++f)
      while (v.sqrt_arg % (f * f) == 0) {
        v.sqrt_arg /= f * f;
        root *= f;
      }
    if (root != 1) rational_part += "*" + std::to_string(root);
  }

  Rational r{1, 1};
  std::size_t pos = 0;
  while (pos < rational_part.size()) {
    std::size_t star = rational_part.find('*', pos);
    if (star == std::string::npos) star = rational_part.size();
    r = r * detail::parse_rational_token(rational_part.substr(pos, star - pos));
    pos = star + 1;
  }
  v.value = r.value() * std::sqrt(static_cast<double>(v.sqrt_arg));
  if (v.sqrt_arg == 1) v.rational = r;
  return v;
}

/// Key/value map of one structured text file: `key = value` lines, `#`
/// comments, bracketed lists kept verbatim for typed getters.
class KeyValueFile {
public:
  KeyValueFile() = default;

  static KeyValueFile from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str(), path);
  }

  static KeyValueFile from_string(const std::string& text, const std::string& origin = "<string>") {
    KeyValueFile f;
    f.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string val = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      f.map_[key] = val;
    }
    return f;
  }

  void set(const std::string& key, const std::string& value) { map_[key] = value; }
  bool has(const std::string& key) const { return map_.count(key) > 0; }

  const std::string& raw(const std::string& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) throw ConfigError("missing key '" + key + "' in " + origin_);
    return it->second;
  }
  std::string raw_or(const std::string& key, const std::string& fallback) const {
    auto it = map_.find(key);
    return it == map_.end() ? fallback : it->second;
  }

  double number(const std::string& key) const { return parse_value(raw(key)).value; }
  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  std::int64_t integer(const std::string& key) const {
    return static_cast<std::int64_t>(std::llround(number(key)));
  }
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::vector<std::string> list(const std::string& key) const {
    std::string s = detail::trim(raw(key));
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
      throw ConfigError("key '" + key + "' must be a bracketed list");
    s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      std::size_t comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      const std::string item = detail::trim(s.substr(pos, comma - pos));
      if (!item.empty()) out.push_back(item);
      pos = comma + 1;
    }
    return out;
  }

  std::vector<ParsedValue> values(const std::string& key) const {
    std::vector<ParsedValue> out;
    for (const auto& item : list(key)) out.push_back(parse_value(item));
    return out;
  }

  const std::map<std::string, std::string>& entries() const { return map_; }

private:
  std::map<std::string, std::string> map_;
  std::string origin_ = "<empty>";
};

/// Exact ratio tags of one coordinate axis: present where the ratio of two
/// parsed values is exactly rational (same square-root part).
inline std::vector<std::optional<Rational>> ratio_tags(const std::vector<ParsedValue>& vals) {
  std::vector<std::optional<Rational>> tags(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i].rational && vals[0].rational && vals[i].sqrt_arg == vals[0].sqrt_arg)
      tags[i] = *vals[i].rational / *vals[0].rational;
  }
  return tags;
}

/// Read a billiard from a key/value description: either the `lshape`
/// shorthand [a, b, c, d] or the triple xs / ys / cells, with cells a list of
/// 0/1 strings ordered bottom to top. Optional `bc` list (bottom, right, top,
/// left).
inline MultiRectBilliard read_billiard(const KeyValueFile& f) {
  if (f.has("lshape")) {
    const auto vals = f.values("lshape");
    if (vals.size() != 4) throw ConfigError("lshape needs exactly [a, b, c, d]");
    std::optional<Rational> b_over_a, d_over_c;
    if (vals[0].rational && vals[1].rational && vals[0].sqrt_arg == vals[1].sqrt_arg)
      b_over_a = *vals[1].rational / *vals[0].rational;
    if (vals[2].rational && vals[3].rational && vals[2].sqrt_arg == vals[3].sqrt_arg)
      d_over_c = *vals[3].rational / *vals[2].rational;
    return new_lshape(vals[0].value, vals[1].value, vals[2].value, vals[3].value, b_over_a,
                      d_over_c);
  }
  if (!f.has("xs") || !f.has("ys") || !f.has("cells"))
    throw ConfigError("billiard needs either 'lshape' or 'xs', 'ys' and 'cells'");
  const auto xv = f.values("xs");
  const auto yv = f.values("ys");
  std::vector<double> xs, ys;
  for (const auto& v : xv) xs.push_back(v.value);
  for (const auto& v : yv) ys.push_back(v.value);
  std::vector<std::vector<int>> cells;
  for (const auto& rowtext : f.list("cells")) {
    std::vector<int> row;
    for (char ch : rowtext) {
      if (ch == '0')
        row.push_back(0);
      else if (ch == '1')
        row.push_back(1);
      else
        throw ConfigError("cells rows must be strings of 0 and 1, got '" + rowtext + "'");
    }
    cells.push_back(std::move(row));
  }
  const bool allow_holes = f.integer_or("allow_holes", 0) != 0;
  return new_mrb(xs, ys, cells, allow_holes, ratio_tags(xv), ratio_tags(yv));
}

// ---------------------------------------------------------------------------
// Deterministic writers
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Comment header with the artifact version and the full configuration, so a
/// result file pins down the run that made it.
inline void write_header(std::ostream& os, const KeyValueFile& config) {
  os << "# billiards 1.0.0\n";
  for (const auto& [k, v] : config.entries()) os << "# " << k << " = " << v << "\n";
}

inline std::ofstream open_output(const std::string& dir, const std::string& name) {
  const std::string path = dir.empty() ? name : dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path);
  return out;
}

}  // namespace io
}  // namespace mrb
