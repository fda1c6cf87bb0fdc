#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "interpnn/core.hpp"

namespace interpnn {

/// Shortest decimal string that round-trips to the exact double. Keeps CSV
/// output compact, readable and byte-reproducible.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Writes via a temporary file plus rename, so readers never observe a
/// partially written file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << content;
    if (!out.flush()) throw IoError("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("failed to move " + tmp + " to " + path + ": " + ec.message());
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  const std::string t = trim(cell);
  const char* begin = t.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (t.empty() || end != begin + t.size() || !std::isfinite(v))
    throw CsvParseError("row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                        ": cannot parse '" + t + "' as a finite number");
  return v;
}

}  // namespace detail

/// Loads a numeric CSV with a header row into a dataset. The named column
/// becomes the label; all remaining columns are features in header order.
inline LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                               Task task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw CsvParseError(path + ": missing header row");
  const auto header = detail::split_csv_line(line);
  std::ptrdiff_t label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (detail::trim(header[i]) == label_column) label_col = static_cast<std::ptrdiff_t>(i);
  if (label_col < 0)
    throw CsvParseError(path + ": label column '" + label_column + "' not found in header");
  if (header.size() < 2) throw CsvParseError(path + ": need at least one feature column");

  std::vector<Point> points;
  std::vector<double> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw CsvParseError("row " + std::to_string(row) + ": expected " +
                          std::to_string(header.size()) + " cells, got " +
                          std::to_string(cells.size()));
    Point p;
    p.reserve(header.size() - 1);
    double label = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_cell(cells[c], row, c);
      if (static_cast<std::ptrdiff_t>(c) == label_col)
        label = v;
      else
        p.push_back(v);
    }
    points.push_back(std::move(p));
    labels.push_back(label);
  }
  if (points.empty()) throw EmptyDatasetError(path + ": no data rows");
  if (task == Task::kClassification) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!is_binary_label(labels[i]))
        throw NonBinaryLabelError("row " + std::to_string(i + 2) + ": label " +
                                  format_double(labels[i]) + " is not in {0, 1}");
  }
  return LabeledDataset::from_rows(task, points, labels);
}

}  // namespace interpnn
