#pragma once

#include "crl/types.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace crl {

/// Renders a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

/// Streaming CSV writer with a fixed column order. Rows are flushed as they
/// are written so aborted runs keep their history.
class CsvWriter {
 public:
  CsvWriter() = default;
  CsvWriter(const std::string& path, std::vector<std::string> columns);

  void write_row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }
  long rows_written() const { return rows_; }
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
  long rows_ = 0;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column_index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
  long num_rows() const { return static_cast<long>(rows.size()); }
};

CsvTable read_csv(const std::string& path);

}  // namespace crl
