#pragma once

#include <string>
#include <vector>

namespace nmf::cli {

/// One polyline; NaN y values break the line.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// 720x480 line chart with labeled axes and a legend.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

}  // namespace nmf::cli
