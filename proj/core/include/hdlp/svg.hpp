#pragma once

#include <string>
#include <vector>

namespace hdlp {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Self-contained SVG document: axes, tick labels, one polyline per series
/// and a legend.
[[nodiscard]] std::string render_svg(const LinePlot& plot);

}  // namespace hdlp
