#pragma once

#include <string>
#include <vector>

namespace fpc {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

// Standalone SVG line plot with markers, axes, ticks and a legend.
std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotSpec& spec);

}  // namespace fpc
