#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "errors.hpp"

namespace llglab {

/// Shortest round-trippable text for a double ("%.17g"), locale independent.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_line(std::initializer_list<std::string> cells) {
  std::string line;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) line += ',';
    line += c;
    first = false;
  }
  return line;
}

inline std::string csv_line(const std::vector<double>& values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += format_number(values[i]);
  }
  return line;
}

/// Comma-separated table with a header row, written with LF line endings.
class CsvTable {
public:
  explicit CsvTable(std::string header) : text_(std::move(header) + "\n") {}

  void row(const std::vector<double>& values) { text_ += csv_line(values) + "\n"; }
  void raw_row(const std::string& line) { text_ += line + "\n"; }
  const std::string& text() const noexcept { return text_; }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text_;
    if (!out) throw Error("write failed for " + path.string());
  }

private:
  std::string text_;
};

} // namespace llglab
