// CSV input, numeric formatting and manifest plumbing for the concent CLI.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace concent_cli {

/// User-input problem; the CLI maps it to exit code 2.
struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw CliError("cannot read '" + path + "'");
  return std::move(buf).str();
}

/// FNV-1a 64-bit content hash, hex-encoded.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t");
  return s.substr(from, to - from + 1);
}

/// Strict numeric CSV: comma-separated, LF or CRLF, optional single header
/// row, every cell a finite number. Errors name the offending physical row.
inline Eigen::MatrixXd parse_numeric_csv(const std::string& bytes,
                                         const std::string& path,
                                         bool header) {
  std::string text = bytes;
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);  // UTF-8 BOM
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line = nl == std::string::npos
                           ? text.substr(start)
                           : text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();  // trailing \n
  if (lines.empty()) throw CliError(path + ": file is empty");

  const std::size_t first_data = header ? 1 : 0;
  if (lines.size() <= first_data)
    throw CliError(path + ": no data rows");

  std::vector<std::vector<double>> rows;
  Eigen::Index width = -1;
  for (std::size_t li = first_data; li < lines.size(); ++li) {
    const std::size_t row_no = li + 1;  // physical 1-based line number
    std::vector<double> row;
    std::size_t pos = 0;
    const std::string& line = lines[li];
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::string cell = trim(
          comma == std::string::npos ? line.substr(pos)
                                     : line.substr(pos, comma - pos));
      if (cell.empty())
        throw CliError(path + ": row " + std::to_string(row_no) +
                       " has an empty cell");
      char* end = nullptr;
      const double value = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size())
        throw CliError(path + ": row " + std::to_string(row_no) +
                       " has a non-numeric cell '" + cell + "'");
      if (!std::isfinite(value))
        throw CliError(path + ": row " + std::to_string(row_no) +
                       " has a non-finite cell '" + cell + "'");
      row.push_back(value);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (width < 0) {
      width = static_cast<Eigen::Index>(row.size());
    } else if (static_cast<Eigen::Index>(row.size()) != width) {
      throw CliError(path + ": row " + std::to_string(row_no) + " has " +
                     std::to_string(row.size()) + " fields, expected " +
                     std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), width);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

/// 17 significant digits: enough for exact double round-trips in CSV cells.
inline std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError("cannot open '" + path + "' for writing");
  out << body;
  if (!out.good()) throw CliError("cannot write '" + path + "'");
}

inline std::string manifest_comment(const nlohmann::ordered_json& manifest) {
  return "# manifest: " + manifest.dump() + "\n";
}

}  // namespace concent_cli
