#include "edfvae/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace edfvae {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 560.0;
constexpr double kMarginLeft = 90.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 50.0;
constexpr double kMarginBottom = 60.0;

struct Range {
  double low = std::numeric_limits<double>::infinity();
  double high = -std::numeric_limits<double>::infinity();

  void include(double value) {
    if (std::isfinite(value)) {
      low = std::min(low, value);
      high = std::max(high, value);
    }
  }
};

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(6);
  out << value;
  return out.str();
}

double nice_step(double span) {
  if (span <= 0.0) {
    return 1.0;
  }
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0}) {
    if (raw <= mult * mag) {
      return mult * mag;
    }
  }
  return 10.0 * mag;
}

}  // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label,
                         const std::string& y_label,
                         const std::vector<PlotSeries>& series,
                         const std::vector<ReferenceLine>& references) {
  Range xr;
  Range yr;
  for (const PlotSeries& s : series) {
    for (double v : s.x) xr.include(v);
    for (double v : s.y) yr.include(v);
    for (double v : s.band_low) yr.include(v);
    for (double v : s.band_high) yr.include(v);
  }
  for (const ReferenceLine& ref : references) {
    yr.include(ref.y);
  }
  if (!std::isfinite(xr.low) || !std::isfinite(yr.low)) {
    throw std::invalid_argument("svg: nothing to plot");
  }
  if (xr.high == xr.low) {
    xr.high = xr.low + 1.0;
  }
  const double pad = 0.05 * (yr.high - yr.low + 1e-12);
  yr.low -= pad;
  yr.high += pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) {
    return kMarginLeft + (x - xr.low) / (xr.high - xr.low) * plot_w;
  };
  auto sy = [&](double y) {
    return kMarginTop + (yr.high - y) / (yr.high - yr.low) * plot_h;
  };

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("svg: cannot open " + path + " for writing");
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"18\">"
      << title << "</text>\n";

  // Axes and ticks.
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
      << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  const double x_step = nice_step(xr.high - xr.low);
  for (double tick = std::ceil(xr.low / x_step) * x_step; tick <= xr.high;
       tick += x_step) {
    out << "<line x1=\"" << sx(tick) << "\" y1=\"" << kMarginTop + plot_h
        << "\" x2=\"" << sx(tick) << "\" y2=\"" << kMarginTop + plot_h + 5
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << sx(tick) << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt(tick) << "</text>\n";
  }
  const double y_step = nice_step(yr.high - yr.low);
  for (double tick = std::ceil(yr.low / y_step) * y_step; tick <= yr.high;
       tick += y_step) {
    out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << sy(tick)
        << "\" x2=\"" << kMarginLeft << "\" y2=\"" << sy(tick)
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << sy(tick) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt(tick) << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\""
      << kHeight - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << x_label << "</text>\n";
  out << "<text x=\"20\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 20 "
      << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  // Confidence bands under the curves.
  for (const PlotSeries& s : series) {
    if (s.band_low.size() == s.x.size() && !s.band_low.empty()) {
      out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.15\" "
             "stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << sx(s.x[i]) << ',' << sy(s.band_high[i]) << ' ';
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        out << sx(s.x[i]) << ',' << sy(s.band_low[i]) << ' ';
      }
      out << "\"/>\n";
    }
  }

  for (const ReferenceLine& ref : references) {
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy(ref.y)
        << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\"" << sy(ref.y)
        << "\" stroke=\"" << ref.color
        << "\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
  }

  for (const PlotSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << sx(s.x[i]) << ',' << sy(s.y[i]) << ' ';
    }
    out << "\"/>\n";
  }

  // Legend.
  double legend_y = kMarginTop + 16.0;
  for (const PlotSeries& s : series) {
    out << "<line x1=\"" << kMarginLeft + 12 << "\" y1=\"" << legend_y - 4
        << "\" x2=\"" << kMarginLeft + 40 << "\" y2=\"" << legend_y - 4
        << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kMarginLeft + 46 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
    legend_y += 18.0;
  }
  for (const ReferenceLine& ref : references) {
    out << "<line x1=\"" << kMarginLeft + 12 << "\" y1=\"" << legend_y - 4
        << "\" x2=\"" << kMarginLeft + 40 << "\" y2=\"" << legend_y - 4
        << "\" stroke=\"" << ref.color
        << "\" stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << kMarginLeft + 46 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << ref.label
        << "</text>\n";
    legend_y += 18.0;
  }

  out << "</svg>\n";
}

}  // namespace edfvae
