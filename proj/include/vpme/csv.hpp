#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vpme/errors.hpp"

namespace vpme {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Minimal CSV assembly with atomic commit (write temporary, then rename).
class CsvWriter {
 public:
  explicit CsvWriter(std::string header) { lines_.push_back(std::move(header)); }

  void row(const std::vector<double>& vals) {
    std::string line;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) line += ',';
      line += format_double(vals[i]);
    }
    lines_.push_back(std::move(line));
  }

  // For rows with non-numeric cells (e.g. a trailing summary label).
  void raw_row(std::string line) { lines_.push_back(std::move(line)); }

  void save(const std::filesystem::path& path) const {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw FormatError("cannot open " + tmp.string());
      for (const auto& l : lines_) out << l << '\n';
      if (!out) throw FormatError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::vector<std::string> lines_;
};

}  // namespace vpme
