#include "selfcheck/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "selfcheck/error.hpp"

namespace selfcheck {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& cell, long line) {
  const std::string text = strip(cell);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("csv: expected a number, got '" + cell + "'", line);
  return value;
}

long parse_label(const std::string& cell, long line) {
  const std::string text = strip(cell);
  long value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("csv: expected an integer label, got '" + cell + "'",
                     line);
  return value;
}

struct CsvHeader {
  std::size_t feature_count = 0;
  bool has_label = false;
};

CsvHeader parse_header(const std::string& line) {
  const std::vector<std::string> cells = split_csv_line(line);
  if (cells.empty()) throw ParseError("csv: empty header", 1);
  CsvHeader header;
  std::size_t i = 0;
  for (; i < cells.size(); ++i) {
    const std::string name = strip(cells[i]);
    if (name == "f" + std::to_string(i)) continue;
    break;
  }
  header.feature_count = i;
  if (header.feature_count == 0)
    throw ParseError("csv: header must start with f0", 1);
  if (i == cells.size()) {
    header.has_label = false;
  } else if (i + 1 == cells.size() && strip(cells[i]) == "label") {
    header.has_label = true;
  } else {
    throw ParseError("csv: unexpected header column '" + cells[i] + "'", 1);
  }
  return header;
}

struct RawCsv {
  CsvHeader header;
  std::vector<std::vector<std::string>> rows;  // data rows, cells unparsed
  std::vector<long> line_numbers;              // 1-based file line per row
};

RawCsv read_raw(const std::string& path) {
  std::ifstream input(path);
  if (!input) throw RejectedInput("csv: cannot open '" + path + "'");
  RawCsv raw;
  std::string line;
  long line_number = 0;
  bool saw_header = false;
  while (std::getline(input, line)) {
    ++line_number;
    if (strip(line).empty()) continue;
    if (!saw_header) {
      raw.header = parse_header(line);
      saw_header = true;
      continue;
    }
    std::vector<std::string> cells = split_csv_line(line);
    const std::size_t expected =
        raw.header.feature_count + (raw.header.has_label ? 1 : 0);
    if (cells.size() != expected)
      throw ParseError("csv: expected " + std::to_string(expected) +
                           " cells, got " + std::to_string(cells.size()),
                       line_number);
    raw.rows.push_back(std::move(cells));
    raw.line_numbers.push_back(line_number);
  }
  if (!saw_header) throw ParseError("csv: file has no header", 1);
  return raw;
}

}  // namespace

void save_csv(const LabeledDataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw RejectedInput("csv: cannot write '" + path + "'");
  for (std::size_t j = 0; j < data.dim(); ++j) {
    if (j) out << ',';
    out << 'f' << j;
  }
  if (data.labeled()) out << ",label";
  out << '\n';
  char buffer[64];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      if (j) out << ',';
      std::snprintf(buffer, sizeof buffer, "%.17g", data.features(i, j));
      out << buffer;
    }
    if (data.labeled()) out << ',' << data.labels[i];
    out << '\n';
  }
  if (!out) throw RejectedInput("csv: write to '" + path + "' failed");
}

LabeledDataset load_csv(const std::string& path, int expected_classes) {
  const RawCsv raw = read_raw(path);
  if (!raw.header.has_label)
    throw RejectedInput("csv: '" + path +
                        "' has no label column; use load_csv_features");
  LabeledDataset data;
  data.features = Matrix(raw.rows.size(), raw.header.feature_count);
  data.labels.reserve(raw.rows.size());
  long max_label = -1;
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    const long line = raw.line_numbers[i];
    for (std::size_t j = 0; j < raw.header.feature_count; ++j)
      data.features(i, j) = parse_double(raw.rows[i][j], line);
    const long label = parse_label(raw.rows[i][raw.header.feature_count], line);
    if (label < 0)
      throw RejectedInput("csv: negative label at line " +
                          std::to_string(line));
    if (expected_classes > 0 && label >= expected_classes)
      throw RejectedInput("csv: label " + std::to_string(label) +
                          " at line " + std::to_string(line) +
                          " exceeds declared class count " +
                          std::to_string(expected_classes));
    max_label = std::max(max_label, label);
    data.labels.push_back(static_cast<int>(label));
  }
  data.num_classes = expected_classes > 0
                         ? expected_classes
                         : static_cast<int>(std::max(max_label + 1, 2l));
  data.validate();
  return data;
}

LabeledDataset load_csv_features(const std::string& path,
                                 int num_classes_hint) {
  if (num_classes_hint < 2)
    throw RejectedInput("csv: num_classes_hint must be >= 2");
  const RawCsv raw = read_raw(path);
  LabeledDataset data;
  data.num_classes = num_classes_hint;
  data.features = Matrix(raw.rows.size(), raw.header.feature_count);
  for (std::size_t i = 0; i < raw.rows.size(); ++i)
    for (std::size_t j = 0; j < raw.header.feature_count; ++j)
      data.features(i, j) = parse_double(raw.rows[i][j], raw.line_numbers[i]);
  return data;
}

}  // namespace selfcheck
