#pragma once

#include <string>
#include <vector>

namespace df {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;
};

// Deterministic single-panel line plot; fixed 640x480 canvas with axis
// labels and a linear scale fitted to the data extent.
std::string render_line_plot(const std::vector<SvgSeries>& series,
                             const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace df
