#include "sociolex/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sociolex/csv.hpp"
#include "sociolex/error.hpp"

namespace sociolex {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0, kRight = 16.0, kTop = 40.0, kBottom = 48.0;

std::string num(double v) {
  // Two decimals are enough for pixel coordinates and keep files small.
  const double r = std::round(v * 100.0) / 100.0;
  return csv::fmt(r == 0.0 ? 0.0 : r);
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_band_plot(const std::string& title, const std::string& y_title,
                             const std::vector<PlotPoint>& points) {
  if (points.empty()) throw AnalysisError("cannot plot an empty series");
  double xmin = points[0].x, xmax = points[0].x;
  double ymin = points[0].lo, ymax = points[0].hi;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min({ymin, p.lo, p.y});
    ymax = std::max({ymax, p.hi, p.y});
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double ypad = 0.06 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
       "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
       num(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"15\">" + esc(title) + "</text>\n";

  // y axis ticks
  for (int t = 0; t <= 4; ++t) {
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    const double yy = py(yv);
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(yy) + "\" x2=\"" +
         num(kWidth - kRight) + "\" y2=\"" + num(yy) +
         "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(yy + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         esc(csv::fmt(std::round(yv * 10000.0) / 10000.0)) + "</text>\n";
  }
  s += "<text x=\"14\" y=\"" + num(kTop + plot_h / 2) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       "transform=\"rotate(-90 14 " + num(kTop + plot_h / 2) + ")\">" +
       esc(y_title) + "</text>\n";

  // x tick labels, thinned to at most eight
  const std::size_t step = std::max<std::size_t>(1, points.size() / 8);
  for (std::size_t i = 0; i < points.size(); i += step) {
    if (points[i].x_label.empty()) continue;
    const double xx = px(points[i].x);
    s += "<line x1=\"" + num(xx) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
         num(xx) + "\" y2=\"" + num(kTop + plot_h + 4) +
         "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + num(xx) + "\" y=\"" + num(kTop + plot_h + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         esc(points[i].x_label) + "</text>\n";
  }

  // CI band
  std::string band = "<path d=\"M";
  for (const auto& p : points) {
    band += num(px(p.x)) + " " + num(py(p.hi)) + " L";
  }
  for (auto it = points.rbegin(); it != points.rend(); ++it) {
    band += num(px(it->x)) + " " + num(py(it->lo)) + " L";
  }
  band.pop_back();  // trailing 'L'
  band += "Z\" fill=\"#4c78a8\" fill-opacity=\"0.22\" stroke=\"none\"/>\n";
  s += band;

  // series line and markers
  std::string line = "<polyline fill=\"none\" stroke=\"#4c78a8\" stroke-width=\"2\" points=\"";
  for (const auto& p : points) {
    line += num(px(p.x)) + "," + num(py(p.y)) + " ";
  }
  line.pop_back();
  line += "\"/>\n";
  s += line;
  for (const auto& p : points) {
    s += "<circle cx=\"" + num(px(p.x)) + "\" cy=\"" + num(py(p.y)) +
         "\" r=\"2.5\" fill=\"#4c78a8\"/>\n";
  }

  // zero line when the range spans it
  if (ymin < 0.0 && ymax > 0.0) {
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(0.0)) + "\" x2=\"" +
         num(kWidth - kRight) + "\" y2=\"" + num(py(0.0)) +
         "\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  }

  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
       num(plot_w) + "\" height=\"" + num(plot_h) +
       "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  s += "</svg>\n";
  return s;
}

void write_band_plot(const std::string& path, const std::string& title,
                     const std::string& y_title, const std::vector<PlotPoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write SVG: " + path);
  out << render_band_plot(title, y_title, points);
  if (!out) throw AnalysisError("write failed: " + path);
}

}  // namespace sociolex
