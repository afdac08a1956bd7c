#pragma once

#include <string>
#include <utility>
#include <vector>

namespace afdx {

struct SvgSeries {
  std::string label;
  std::string color = "#2563eb";
  bool line = false;  // connect points in order
  std::vector<std::pair<double, double>> points;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool x_log = false;
  bool y_log = false;
  std::vector<SvgSeries> series;
};

// Self-contained SVG document, deterministic output.
std::string render_svg(const SvgPlot& plot, int width = 860, int height = 520);

}  // namespace afdx
