#include "hdlp/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace hdlp {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string render_svg(const LinePlot& plot) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 190, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  y0 = std::min(y0, 0.0);
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o.precision(6);
  o << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n'
    << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << width << R"(" height=")" << height
    << R"(" font-family="sans-serif" font-size="12">)" << '\n'
    << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n'
    << R"(<text x=")" << width / 2 << R"(" y="22" text-anchor="middle" font-size="15">)"
    << escape(plot.title) << "</text>\n";
  // Axes.
  o << R"(<line x1=")" << left << R"(" y1=")" << top + ph << R"(" x2=")" << left + pw
    << R"(" y2=")" << top + ph << R"(" stroke="black"/>)" << '\n'
    << R"(<line x1=")" << left << R"(" y1=")" << top << R"(" x2=")" << left << R"(" y2=")"
    << top + ph << R"(" stroke="black"/>)" << '\n';
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    o << R"(<text x=")" << sx(xv) << R"(" y=")" << top + ph + 18
      << R"(" text-anchor="middle">)" << xv << "</text>\n"
      << R"(<text x=")" << left - 8 << R"(" y=")" << sy(yv) + 4 << R"(" text-anchor="end">)"
      << yv << "</text>\n";
  }
  o << R"(<text x=")" << left + pw / 2 << R"(" y=")" << height - 15
    << R"(" text-anchor="middle">)" << escape(plot.x_label) << "</text>\n"
    << R"(<text x="18" y=")" << top + ph / 2 << R"(" text-anchor="middle" transform="rotate(-90 18 )"
    << top + ph / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const auto& ser = plot.series[s];
    const char* color = kPalette[s % kPalette.size()];
    o << R"(<polyline fill="none" stroke=")" << color << R"(" stroke-width="2" points=")";
    for (std::size_t k = 0; k < std::min(ser.x.size(), ser.y.size()); ++k) {
      if (!std::isfinite(ser.x[k]) || !std::isfinite(ser.y[k])) continue;
      o << sx(ser.x[k]) << ',' << sy(ser.y[k]) << ' ';
    }
    o << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(s);
    o << R"(<line x1=")" << left + pw + 12 << R"(" y1=")" << ly - 4 << R"(" x2=")"
      << left + pw + 32 << R"(" y2=")" << ly - 4 << R"(" stroke=")" << color
      << R"(" stroke-width="2"/>)" << '\n'
      << R"(<text x=")" << left + pw + 38 << R"(" y=")" << ly << R"(">)" << escape(ser.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace hdlp
