#pragma once

// CSV input for the command-line tool: a rectangular numeric matrix with an
// optional header line and an optional leading date (or other label) column.
// Labels are kept for reporting only.

#include "segcop/segmented_ranks.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segcop {

struct InputDataset {
  SampleMatrix data;
  std::vector<std::string> column_names;  // numeric columns only; empty without header
  std::vector<std::string> labels;        // leading label column, empty if absent
  std::string label_name;

  [[nodiscard]] bool has_labels() const noexcept { return !labels.empty(); }
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim_field(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim_field(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

}  // namespace detail

inline InputDataset parse_dataset(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (detail::trim_field(line).empty()) continue;
    rows.push_back(detail::split_csv_line(line));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw DatasetError("input is empty");

  const std::size_t width = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw DatasetError("line " + std::to_string(line_numbers[r]) + ": expected " + std::to_string(width) +
                         " fields, found " + std::to_string(rows[r].size()));
    }
  }

  // A header is a first line with a non-numeric field beyond column 0 that
  // the second line has as numeric, or a fully non-numeric first line.
  auto numeric = [](const std::string& s) { return detail::parse_cell(s).has_value(); };
  bool header = false;
  if (rows.size() >= 2) {
    for (std::size_t c = 0; c < width; ++c) {
      if (!numeric(rows[0][c]) && numeric(rows[1][c])) header = true;
    }
  }
  if (!header) {
    bool any_numeric = false;
    for (const auto& f : rows[0]) any_numeric = any_numeric || numeric(f);
    header = !any_numeric;
  }
  const std::size_t first_data = header ? 1 : 0;
  if (first_data >= rows.size()) throw DatasetError("no data rows");

  // Leading label column: column 0 non-numeric on every data row.
  bool label_column = width >= 1;
  for (std::size_t r = first_data; r < rows.size() && label_column; ++r) {
    label_column = !numeric(rows[r][0]);
  }
  const std::size_t first_col = label_column ? 1 : 0;
  const std::size_t d = width - first_col;
  const std::size_t n = rows.size() - first_data;
  if (d < 2) throw DatasetError("need at least 2 numeric columns, found " + std::to_string(d));
  if (n < 4) throw DatasetError("need at least 4 data rows, found " + std::to_string(n));

  std::vector<double> values;
  values.reserve(n * d);
  InputDataset out{SampleMatrix(2, 1, {0.0, 1.0}), {}, {}, {}};
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    for (std::size_t c = first_col; c < width; ++c) {
      const auto v = detail::parse_cell(rows[r][c]);
      if (!v) {
        throw DatasetError("line " + std::to_string(line_numbers[r]) + ", column " + std::to_string(c + 1) +
                           ": non-numeric value '" + rows[r][c] + "'");
      }
      values.push_back(*v);
    }
    if (label_column) out.labels.push_back(rows[r][0]);
  }
  if (header) {
    out.column_names.assign(rows[0].begin() + static_cast<std::ptrdiff_t>(first_col), rows[0].end());
    if (label_column) out.label_name = rows[0][0];
  }
  try {
    out.data = SampleMatrix(n, d, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw DatasetError(e.what());
  }
  return out;
}

inline InputDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  return parse_dataset(in);
}

}  // namespace segcop
