#pragma once

#include <string>
#include <vector>

namespace edfvae {

/// One curve: points, optional confidence band (same length as x when
/// present).
struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band_low;
  std::vector<double> band_high;
};

struct ReferenceLine {
  std::string label;
  std::string color;
  double y = 0.0;
};

/// Minimal SVG line plot with CI bands and horizontal reference lines.
void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label,
                         const std::string& y_label,
                         const std::vector<PlotSeries>& series,
                         const std::vector<ReferenceLine>& references);

}  // namespace edfvae
