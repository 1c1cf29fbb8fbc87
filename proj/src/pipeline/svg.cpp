#include "declineforge/pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "declineforge/error.hpp"
#include "declineforge/pipeline/csvio.hpp"

namespace df {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kMarginLeft = 70, kMarginRight = 20;
constexpr double kMarginTop = 40, kMarginBottom = 50;

struct Scale {
  double lo, hi;
  double px0, px1;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (px0 + px1);
    return px0 + (v - lo) / (hi - lo) * (px1 - px0);
  }
};

}  // namespace

std::string render_line_plot(const std::vector<SvgSeries>& series,
                             const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label) {
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool any = false;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        any = true;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  const double ypad = (yhi - ylo) * 0.05;
  ylo -= ypad;
  yhi += ypad;
  const Scale sx{xlo, xhi, kMarginLeft, kWidth - kMarginRight};
  const Scale sy{ylo, yhi, kHeight - kMarginBottom, kMarginTop};

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

  // axes
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom
      << "\" x2=\"" << kWidth - kMarginRight << "\" y2=\""
      << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";

  // 5 ticks per axis
  for (int t = 0; t <= 4; ++t) {
    const double fx = xlo + (xhi - xlo) * t / 4.0;
    const double fy = ylo + (yhi - ylo) * t / 4.0;
    out << "<text x=\"" << sx(fx) << "\" y=\"" << kHeight - kMarginBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << format_double(std::round(fx * 100) / 100)
        << "</text>\n"
        << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">" << format_double(std::round(fy * 100) / 100)
        << "</text>\n";
  }
  out << "<text x=\"" << (kMarginLeft + kWidth - kMarginRight) / 2 << "\" y=\""
      << kHeight - 12 << "\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"13\">" << x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << (kMarginTop + kHeight - kMarginBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 16 "
      << (kMarginTop + kHeight - kMarginBottom) / 2 << ")\">" << y_label
      << "</text>\n";

  for (const auto& s : series) {
    if (s.x.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << format_double(sx(s.x[i])) << "," << format_double(sy(s.y[i]))
          << " ";
    out << "\"/>\n";
    if (s.markers)
      for (size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << format_double(sx(s.x[i])) << "\" cy=\""
            << format_double(sy(s.y[i])) << "\" r=\"3\" fill=\"" << s.color
            << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::string& path, const std::string& svg) {
  std::ofstream f(path);
  if (!f) throw IoError("svg: cannot write '" + path + "'");
  f << svg;
  if (!f) throw IoError("svg: short write to '" + path + "'");
}

}  // namespace df
