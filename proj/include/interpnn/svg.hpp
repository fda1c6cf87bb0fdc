#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace interpnn {

/// One polyline of an SVG chart. NaN y-values are skipped (used for grid
/// points without a theory value).
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool markers = false;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace detail

/// Minimal static line chart: axes, ticks, legend, one polyline per series.
/// No external renderer; output is deterministic for fixed input.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<PlotSeries>& series) {
  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 70, kRight = 30, kTop = 50, kBottom = 60;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool any = false;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (std::isnan(y)) continue;
      if (!any) {
        x_min = x_max = x;
        y_min = y_max = y;
        any = true;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const auto sx = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
  };
  const auto sy = [&](double y) {
    return kHeight - kBottom - (y - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_num(kWidth) +
         "\" height=\"" + detail::svg_num(kHeight) + "\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::svg_num(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";

  // axes and ticks
  out += "<line x1=\"" + detail::svg_num(kLeft) + "\" y1=\"" + detail::svg_num(kHeight - kBottom) +
         "\" x2=\"" + detail::svg_num(kWidth - kRight) + "\" y2=\"" +
         detail::svg_num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + detail::svg_num(kLeft) + "\" y1=\"" + detail::svg_num(kTop) +
         "\" x2=\"" + detail::svg_num(kLeft) + "\" y2=\"" + detail::svg_num(kHeight - kBottom) +
         "\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const double fx = x_min + (x_max - x_min) * t / kTicks;
    const double fy = y_min + (y_max - y_min) * t / kTicks;
    out += "<line x1=\"" + detail::svg_num(sx(fx)) + "\" y1=\"" +
           detail::svg_num(kHeight - kBottom) + "\" x2=\"" + detail::svg_num(sx(fx)) +
           "\" y2=\"" + detail::svg_num(kHeight - kBottom + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::svg_num(sx(fx)) + "\" y=\"" +
           detail::svg_num(kHeight - kBottom + 20) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + detail::svg_num(fx) + "</text>\n";
    out += "<line x1=\"" + detail::svg_num(kLeft - 5) + "\" y1=\"" + detail::svg_num(sy(fy)) +
           "\" x2=\"" + detail::svg_num(kLeft) + "\" y2=\"" + detail::svg_num(sy(fy)) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::svg_num(kLeft - 9) + "\" y=\"" + detail::svg_num(sy(fy) + 4) +
           "\" text-anchor=\"end\" font-size=\"11\">" + detail::svg_num(fy) + "</text>\n";
  }
  out += "<text x=\"" + detail::svg_num((kLeft + kWidth - kRight) / 2) + "\" y=\"" +
         detail::svg_num(kHeight - 15) + "\" text-anchor=\"middle\" font-size=\"13\">" + x_label +
         "</text>\n";
  out += "<text x=\"18\" y=\"" + detail::svg_num((kTop + kHeight - kBottom) / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
         detail::svg_num((kTop + kHeight - kBottom) / 2) + ")\">" + y_label + "</text>\n";

  double legend_y = kTop + 8;
  for (const auto& s : series) {
    std::string poly;
    for (const auto& [x, y] : s.points) {
      if (std::isnan(y)) continue;
      poly += detail::svg_num(sx(x)) + "," + detail::svg_num(sy(y)) + " ";
      if (s.markers)
        out += "<circle cx=\"" + detail::svg_num(sx(x)) + "\" cy=\"" + detail::svg_num(sy(y)) +
               "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
    }
    out += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    out += "<line x1=\"" + detail::svg_num(kWidth - kRight - 170) + "\" y1=\"" +
           detail::svg_num(legend_y) + "\" x2=\"" + detail::svg_num(kWidth - kRight - 140) +
           "\" y2=\"" + detail::svg_num(legend_y) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\"" + (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    out += "<text x=\"" + detail::svg_num(kWidth - kRight - 132) + "\" y=\"" +
           detail::svg_num(legend_y + 4) + "\" font-size=\"12\">" + s.label + "</text>\n";
    legend_y += 18;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace interpnn
