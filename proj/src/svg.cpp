#include "crl/svg.hpp"

#include "crl/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace crl {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 150;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

struct Scale {
  double lo = 0.0, hi = 1.0;
  double px0 = 0.0, px1 = 1.0;
  double map(double v) const {
    if (hi == lo) return 0.5 * (px0 + px1);
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series,
                      const std::vector<ThresholdLine>& thresholds) {
  std::ofstream os(path);
  require(os.good(), "cannot open SVG for writing: " + path);

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  long total_points = 0;
  for (const auto& s : series) {
    for (double v : s.x) { xlo = std::min(xlo, v); xhi = std::max(xhi, v); }
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      ylo = std::min(ylo, v);
      yhi = std::max(yhi, v);
    }
    total_points += static_cast<long>(s.x.size());
  }
  for (const auto& t : thresholds) {
    ylo = std::min(ylo, t.value);
    yhi = std::max(yhi, t.value);
  }
  if (!std::isfinite(xlo)) { xlo = 0; xhi = 1; }
  if (!std::isfinite(ylo)) { ylo = 0; yhi = 1; }
  if (ylo == yhi) { ylo -= 0.5; yhi += 0.5; }
  const double ypad = 0.05 * (yhi - ylo);
  ylo -= ypad;
  yhi += ypad;

  Scale xs{xlo, xhi, static_cast<double>(kMarginLeft),
           static_cast<double>(kWidth - kMarginRight)};
  Scale ys{ylo, yhi, static_cast<double>(kHeight - kMarginBottom),
           static_cast<double>(kMarginTop)};

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" data-points=\"" << total_points
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"14\">"
     << esc(title) << "</text>\n";

  // Axes with ~5 ticks each.
  os << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xlo + (xhi - xlo) * i / 5.0;
    const double yv = ylo + (yhi - ylo) * i / 5.0;
    os << "<line x1=\"" << xs.map(xv) << "\" y1=\"" << ys.px0 << "\" x2=\""
       << xs.map(xv) << "\" y2=\"" << ys.px0 + 4 << "\" stroke=\"#333\"/>\n";
    os << "<text x=\"" << xs.map(xv) << "\" y=\"" << ys.px0 + 16
       << "\" text-anchor=\"middle\">" << format_double(std::round(xv))
       << "</text>\n";
    os << "<line x1=\"" << xs.px0 - 4 << "\" y1=\"" << ys.map(yv) << "\" x2=\""
       << xs.px0 << "\" y2=\"" << ys.map(yv) << "\" stroke=\"#333\"/>\n";
    std::ostringstream lab;
    lab.precision(3);
    lab << yv;
    os << "<text x=\"" << xs.px0 - 8 << "\" y=\"" << ys.map(yv) + 3
       << "\" text-anchor=\"end\">" << lab.str() << "</text>\n";
  }
  os << "</g>\n";
  os << "<rect x=\"" << xs.px0 << "\" y=\"" << ys.px1 << "\" width=\""
     << xs.px1 - xs.px0 << "\" height=\"" << ys.px0 - ys.px1
     << "\" fill=\"none\" stroke=\"#999\"/>\n";

  for (const auto& t : thresholds) {
    os << "<line class=\"threshold\" x1=\"" << xs.px0 << "\" y1=\""
       << ys.map(t.value) << "\" x2=\"" << xs.px1 << "\" y2=\""
       << ys.map(t.value)
       << "\" stroke=\"black\" stroke-dasharray=\"6,4\" data-value=\""
       << format_double(t.value) << "\"/>\n";
  }

  int color = 0;
  double legend_y = kMarginTop + 10;
  for (const auto& s : series) {
    const char* c = kPalette[color % 8];
    os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << c
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double yv = std::isfinite(s.y[i]) ? s.y[i] : ylo;
      os << xs.map(s.x[i]) << ',' << ys.map(yv) << ' ';
    }
    os << "\"/>\n";
    os << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << legend_y
       << "\" x2=\"" << kWidth - kMarginRight + 30 << "\" y2=\"" << legend_y
       << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kWidth - kMarginRight + 35 << "\" y=\""
       << legend_y + 3
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << esc(s.label)
       << "</text>\n";
    legend_y += 14;
    color += 1;
  }
  os << "</svg>\n";
  require(os.good(), "SVG write failed: " + path);
}

void write_heat_grid(const std::string& path, const std::string& title,
                     int rows, int cols, const std::vector<double>& values,
                     const std::vector<std::string>& row_labels,
                     const std::vector<std::string>& col_labels) {
  require(static_cast<int>(values.size()) == rows * cols,
          "heat grid size mismatch");
  std::ofstream os(path);
  require(os.good(), "cannot open SVG for writing: " + path);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) { lo = 0.0; hi = 1.0; }
  if (lo == hi) hi = lo + 1.0;

  const int cell = 46;
  const int left = 90, top = 50;
  const int width = left + cols * cell + 30;
  const int height = top + rows * cell + 40;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" data-rows=\"" << rows
     << "\" data-cols=\"" << cols << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"13\">" << esc(title)
     << "</text>\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      std::string fill = "none";
      if (std::isfinite(v)) {
        const double t = (v - lo) / (hi - lo);
        const int red = static_cast<int>(40 + 200 * t);
        const int blue = static_cast<int>(240 - 200 * t);
        std::ostringstream color;
        color << "rgb(" << red << ",80," << blue << ")";
        fill = color.str();
      }
      os << "<rect class=\"cell\" x=\"" << left + c * cell << "\" y=\""
         << top + r * cell << "\" width=\"" << cell - 2 << "\" height=\""
         << cell - 2 << "\" fill=\"" << fill << "\" stroke=\"#666\"/>\n";
      if (std::isfinite(v)) {
        std::ostringstream lab;
        lab.precision(2);
        lab << v;
        os << "<text x=\"" << left + c * cell + cell / 2 - 1 << "\" y=\""
           << top + r * cell + cell / 2 + 3
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"10\" fill=\"white\">" << lab.str() << "</text>\n";
      }
    }
  }
  os << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\">\n";
  for (int r = 0; r < rows && r < static_cast<int>(row_labels.size()); ++r)
    os << "<text x=\"" << left - 6 << "\" y=\"" << top + r * cell + cell / 2
       << "\" text-anchor=\"end\">" << esc(row_labels[r]) << "</text>\n";
  for (int c = 0; c < cols && c < static_cast<int>(col_labels.size()); ++c)
    os << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\""
       << top + rows * cell + 16 << "\" text-anchor=\"middle\">"
       << esc(col_labels[c]) << "</text>\n";
  os << "</g>\n</svg>\n";
  require(os.good(), "SVG write failed: " + path);
}

}  // namespace crl
