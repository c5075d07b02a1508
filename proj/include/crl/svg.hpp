#pragma once

#include "crl/types.hpp"

#include <string>
#include <vector>

namespace crl {

/// Minimal static SVG rendering: line charts with optional dashed threshold
/// lines, and heat grids for sweep reports. Charts are views over CSV data;
/// every plotted number comes from the caller.

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ThresholdLine {
  std::string label;
  double value = 0.0;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series,
                      const std::vector<ThresholdLine>& thresholds = {});

/// Heat grid: values laid out row-major on rows x cols; NaN cells are drawn
/// hollow. Row/column labels are printed alongside.
void write_heat_grid(const std::string& path, const std::string& title,
                     int rows, int cols, const std::vector<double>& values,
                     const std::vector<std::string>& row_labels,
                     const std::vector<std::string>& col_labels);

}  // namespace crl
