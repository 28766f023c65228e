#pragma once

#include <string>
#include <vector>

namespace sociolex {

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::string x_label;  // tick text; empty ticks are auto-thinned
};

// Self-contained SVG line plot with a shaded band between lo and hi. The
// output is deterministic: no timestamps, fixed float formatting.
std::string render_band_plot(const std::string& title, const std::string& y_title,
                             const std::vector<PlotPoint>& points);

void write_band_plot(const std::string& path, const std::string& title,
                     const std::string& y_title, const std::vector<PlotPoint>& points);

}  // namespace sociolex
