#pragma once

// Artifact emission: CSV tables with round-trip-exact numbers and
// write-then-rename file output so a failed run never leaves half a file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modclock {

// shortest-round-trip-safe decimal form, locale-independent
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  explicit CsvTable(std::vector<std::string> columns) : header(std::move(columns)) {
    if (header.empty()) throw std::invalid_argument("csv table needs at least one column");
  }

  void add_row(std::vector<double> row) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width does not match the header");
    rows.push_back(std::move(row));
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c) out += ',';
      out += header[c];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += format_double(row[c]);
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace modclock
