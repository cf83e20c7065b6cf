#include "rscm/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>

namespace rscm {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_missing(const std::string& f) {
  std::string lower(f);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

std::optional<double> parse_double(const std::string& f) {
  double v = 0.0;
  const char* first = f.data();
  const char* last = f.data() + f.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<Row> read_rows(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    rows.push_back(Row{number, split_fields(line)});
  }
  return rows;
}

bool all_numeric(const Row& row) {
  return std::all_of(row.fields.begin(), row.fields.end(),
                     [](const std::string& f) { return parse_double(f).has_value(); });
}

/// Parses rows[first..] into a matrix, fields [skip, skip + width).
Matrix parse_block(const std::vector<Row>& rows, std::size_t first, std::size_t skip,
                   std::size_t width) {
  Matrix m(static_cast<Index>(rows.size() - first), static_cast<Index>(width));
  for (std::size_t r = first; r < rows.size(); ++r) {
    const Row& row = rows[r];
    if (row.fields.size() != skip + width) {
      throw ParseError("line " + std::to_string(row.line) + ": expected " +
                           std::to_string(skip + width) + " fields, found " +
                           std::to_string(row.fields.size()),
                       row.line);
    }
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& f = row.fields[skip + c];
      const std::size_t column = skip + c + 1;
      if (is_missing(f)) {
        throw ParseError("line " + std::to_string(row.line) + ", column " +
                             std::to_string(column) + ": missing value",
                         row.line, column);
      }
      const auto v = parse_double(f);
      if (!v) {
        throw ParseError("line " + std::to_string(row.line) + ", column " +
                             std::to_string(column) + ": not a number: '" + f + "'",
                         row.line, column);
      }
      m(static_cast<Index>(r - first), static_cast<Index>(c)) = *v;
    }
  }
  return m;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  return in;
}

}  // namespace

std::string format_number(double value, bool raw) {
  char buf[64];
  std::snprintf(buf, sizeof buf, raw ? "%.17g" : "%.6g", value);
  return buf;
}

SampleSet read_samples_csv(std::istream& in) {
  const std::vector<Row> rows = read_rows(in);
  if (rows.empty()) throw ParseError("no data rows", 0);
  const std::size_t first = all_numeric(rows.front()) ? 0 : 1;
  if (first >= rows.size()) throw ParseError("no data rows after header", rows.front().line);
  return parse_block(rows, first, 0, rows[first].fields.size());
}

SampleSet read_samples_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_samples_csv(in);
}

ReturnsTable read_returns_csv(std::istream& in) {
  const std::vector<Row> rows = read_rows(in);
  if (rows.empty()) throw ParseError("missing header row", 0);
  ReturnsTable table;
  table.assets = rows.front().fields;
  std::size_t skip = 0;
  if (!table.assets.empty()) {
    std::string head = table.assets.front();
    std::transform(head.begin(), head.end(), head.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (head == "date") {
      skip = 1;
      table.assets.erase(table.assets.begin());
    }
  }
  if (table.assets.empty()) throw ParseError("header names no assets", rows.front().line);
  if (rows.size() < 2) throw ParseError("no return rows", rows.front().line);
  table.returns = parse_block(rows, 1, skip, table.assets.size());
  return table;
}

ReturnsTable read_returns_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_returns_csv(in);
}

LabeledDataset read_labeled_csv(std::istream& in) {
  const std::vector<Row> rows = read_rows(in);
  if (rows.empty()) throw ParseError("no data rows", 0);
  const std::size_t first = all_numeric(rows.front()) ? 0 : 1;
  if (first >= rows.size()) throw ParseError("no data rows after header", rows.front().line);
  const std::size_t width = rows[first].fields.size();
  if (width < 2) throw ParseError("need at least one feature and a label column", rows[first].line);
  const Matrix all = parse_block(rows, first, 0, width);
  std::vector<int> labels(static_cast<std::size_t>(all.rows()));
  for (Index i = 0; i < all.rows(); ++i) {
    const double v = all(i, all.cols() - 1);
    const std::size_t line = rows[first + static_cast<std::size_t>(i)].line;
    if (v != std::round(v) || v < 1.0) {
      throw ParseError("line " + std::to_string(line) + ": class label must be a positive integer",
                       line, width);
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(v);
  }
  return LabeledDataset(all.leftCols(all.cols() - 1), std::move(labels));
}

LabeledDataset read_labeled_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return read_labeled_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, bool raw) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_number(m(i, j), raw);
    }
    out << '\n';
  }
}

}  // namespace rscm
