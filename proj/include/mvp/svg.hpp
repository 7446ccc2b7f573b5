#pragma once

#include <string>
#include <vector>

namespace mvp {

// Minimal SVG plots. Output depends only on the inputs (numbers are printed
// with fixed precision), so identical data renders to identical bytes.

struct BarSeries {
  std::string name;             // legend entry
  std::vector<double> values;   // one per category
  std::vector<double> errors;   // optional half-height error bars
};

// Grouped bars: one group per category, one bar per series. Values are
// plotted on a fixed [0, y_max] axis.
std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<std::string>& categories,
                            const std::vector<BarSeries>& series, double y_max = 1.0);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> errors;   // optional
};

// Line plot with markers. With log_x, non-positive x values are drawn at the
// left edge of the axis.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<LineSeries>& series,
                          bool log_x = false, double y_min = 0.0, double y_max = 1.0);

}  // namespace mvp
