#include "crl/csv.hpp"

#include <cstdio>
#include <sstream>

namespace crl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> columns)
    : columns_(std::move(columns)) {
  out_.open(path);
  require(out_.good(), "cannot open CSV for writing: " + path);
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns_[i];
  }
  out_ << '\n';
  out_.flush();
}

void CsvWriter::write_row(const std::vector<double>& values) {
  require(values.size() == columns_.size(), "CSV row arity mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
  out_.flush();
  rows_ += 1;
}

int CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw ConfigError("CSV column not found: " + name);
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const int idx = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open CSV: " + path);
  CsvTable t;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty CSV: " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) t.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    require(row.size() == t.columns.size(), "ragged CSV row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace crl
