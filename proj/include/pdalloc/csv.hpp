#pragma once

// Minimal CSV reading and writing. Fields may be double-quoted; a quote
// inside a quoted field is written twice. Numbers are written in the
// shortest form that reads back exactly.

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "pdalloc/common.hpp"

namespace pdalloc::csv {

struct Row {
  std::size_t line = 0;  ///< 1-based source line
  std::vector<std::string> fields;
};

inline std::vector<std::string> split_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError(where + ": unterminated quoted field");
  out.push_back(cur);
  return out;
}

/// Non-empty lines of a CSV document; `name` prefixes error messages.
inline std::vector<Row> parse(std::istream& in, const std::string& name) {
  std::vector<Row> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back({n, split_line(line, name + ":" + std::to_string(n))});
  }
  return rows;
}

inline std::vector<Row> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse(in, path);
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

/// Parse a whole field as a finite double.
inline bool try_number(const std::string& field, double& out) {
  const std::string s = trim(field);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline double number(const std::string& field, const std::string& where) {
  double v = 0.0;
  if (!try_number(field, v)) throw ParseError(where + ": expected a number, got '" + field + "'");
  return v;
}

/// Shortest round-trip representation.
inline std::string format(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

/// Rectangular table writer.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header) : width_(header.size()) { row(header); }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw Error("CSV row width does not match header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(fields[i]);
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << out_.str();
  }

 private:
  std::size_t width_;
  std::ostringstream out_;
};

}  // namespace pdalloc::csv
