#ifndef HEATRECT_SVG_PLOT_HPP
#define HEATRECT_SVG_PLOT_HPP

#include <string>
#include <vector>

namespace heatrect {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Quick-look line plot. Non-finite points, and non-positive ones on log
/// axes, are skipped.
std::string line_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace heatrect

#endif  // HEATRECT_SVG_PLOT_HPP
