#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "knotpair/errors.hpp"

namespace knotpair {

/// Minimal CSV layer for the pipeline's file formats. Fields never contain
/// commas or quotes; lines starting with '#' carry config echoes and are
/// skipped on read.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline CsvTable read_csv(std::istream& in, const std::string& name) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw format_error(name + ": line " + std::to_string(line_no) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) {
    throw format_error(name + ": missing header row");
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  return read_csv(in, path);
}

/// Requires exactly the given header (a cheap schema check).
inline void require_header(const CsvTable& table,
                           const std::vector<std::string>& expected,
                           const std::string& name) {
  if (table.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    std::string got;
    for (const auto& h : table.header) got += (got.empty() ? "" : ",") + h;
    throw format_error(name + ": header mismatch, expected '" + want +
                       "' got '" + got + "'");
  }
}

/// Shortest round-trippable decimal form; parsing it recovers the same bits.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) { return std::to_string(v); }

inline double parse_double(std::string_view field, const std::string& where) {
  double v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    throw format_error(where + ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view field, const std::string& where) {
  long long v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    throw format_error(where + ": not an integer: '" + std::string(field) +
                       "'");
  }
  return v;
}

inline std::optional<long long> parse_optional_int(std::string_view field,
                                                   const std::string& where) {
  if (field.empty()) return std::nullopt;
  return parse_int(field, where);
}

inline std::optional<double> parse_optional_double(std::string_view field,
                                                   const std::string& where) {
  if (field.empty()) return std::nullopt;
  return parse_double(field, where);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw io_error("cannot create " + path);
    path_ = path;
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw io_error("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

}  // namespace knotpair
