#pragma once

// Minimal SVG line/scatter plots for experiment outputs.  No external
// dependencies; fixed-size canvas with axes, ticks and a legend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "kfl/errors.hpp"

namespace kfl {

struct PlotSeries {
  std::vector<double> x, y;
  std::string label;
  bool line = true;  // false: scatter only
};

inline std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                           const std::string& title, const std::string& xlabel,
                           const std::string& ylabel) {
  const int W = 720, H = 480;
  const int ml = 70, mr = 20, mt = 40, mb = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 <= x1)) {
    x0 = 0;
    x1 = 1;
  }
  if (!(y0 <= y1)) {
    y0 = 0;
    y1 = 1;
  }
  if (x1 - x0 < 1e-300) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-300) y1 = y0 + 1.0;
  const double xpad = 0.04 * (x1 - x0), ypad = 0.06 * (y1 - y0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;
  auto X = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
  auto Y = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IOError, "cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x0 + (x1 - x0) * t / 5.0;
    const double yv = y0 + (y1 - y0) * t / 5.0;
    out << "<line x1=\"" << X(xv) << "\" y1=\"" << H - mb << "\" x2=\"" << X(xv) << "\" y2=\""
        << H - mb + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 20
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt_g(xv)
        << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(yv) << "\" x2=\"" << ml << "\" y2=\"" << Y(yv)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << Y(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt_g(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << xlabel
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 "
         "18 "
      << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";

  const char* colors[6] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = colors[si % 6];
    if (s.line && s.x.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << X(s.x[i]) << "," << Y(s.y[i]) << " ";
      out << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"2.2\" fill=\"" << col
          << "\"/>\n";
    out << "<text x=\"" << W - mr - 8 << "\" y=\"" << mt + 16 * (int)si + 12
        << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << col << "\">"
        << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace kfl
