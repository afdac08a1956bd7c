#include "afdx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace afdx {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  std::vector<double> ticks;

  double frac(double v) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    if (h == l) return 0.5;
    return (a - l) / (h - l);
  }
};

Axis fit_axis(double lo, double hi, bool log) {
  Axis ax;
  ax.log = log;
  if (log) {
    lo = std::max(lo, 1e-12);
    hi = std::max(hi, lo * 10.0);
    const int dlo = int(std::floor(std::log10(lo)));
    const int dhi = int(std::ceil(std::log10(hi)));
    ax.lo = std::pow(10.0, dlo);
    ax.hi = std::pow(10.0, dhi);
    for (int d = dlo; d <= dhi; ++d) ax.ticks.push_back(std::pow(10.0, d));
    return ax;
  }
  if (hi <= lo) hi = lo + 1.0;
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  ax.lo = std::floor(lo / step) * step;
  ax.hi = std::ceil(hi / step) * step;
  for (double t = ax.lo; t <= ax.hi + step * 0.5; t += step) ax.ticks.push_back(t);
  return ax;
}

}  // namespace

std::string render_svg(const SvgPlot& plot, int width, int height) {
  const double ml = 72, mr = 24, mt = plot.title.empty() ? 20 : 44, mb = 52;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : plot.series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  const Axis xa = fit_axis(xmin, xmax, plot.x_log);
  const Axis ya = fit_axis(ymin, ymax, plot.y_log);
  auto px = [&](double v) { return ml + xa.frac(v) * pw; };
  auto py = [&](double v) { return mt + (1.0 - ya.frac(v)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
    << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!plot.title.empty())
    o << "<text x=\"" << width / 2 << "\" y=\"26\" text-anchor=\"middle\" "
      << "font-family=\"monospace\" font-size=\"15\">" << escape(plot.title)
      << "</text>\n";

  for (double t : xa.ticks) {
    const double x = px(t);
    o << "<line x1=\"" << num(x) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(x)
      << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#e5e7eb\"/>\n";
    o << "<text x=\"" << num(x) << "\" y=\"" << num(mt + ph + 18)
      << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">"
      << num(t) << "</text>\n";
  }
  for (double t : ya.ticks) {
    const double y = py(t);
    o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(y) << "\" x2=\"" << num(ml + pw)
      << "\" y2=\"" << num(y) << "\" stroke=\"#e5e7eb\"/>\n";
    o << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(y + 4)
      << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" << num(t)
      << "</text>\n";
  }
  o << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#374151\"/>\n";
  o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(double(height) - 12)
    << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">"
    << escape(plot.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << num(mt + ph / 2)
    << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\" "
    << "transform=\"rotate(-90 16 " << num(mt + ph / 2) << ")\">"
    << escape(plot.y_label) << "</text>\n";

  for (const auto& s : plot.series) {
    if (s.line && s.points.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.8\" points=\"";
      for (const auto& [x, y] : s.points) o << num(px(x)) << "," << num(py(y)) << " ";
      o << "\"/>\n";
    }
    for (const auto& [x, y] : s.points)
      o << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
        << "\" r=\"3\" fill=\"" << s.color << "\" fill-opacity=\"0.85\"/>\n";
  }

  double ly = mt + 14;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    o << "<circle cx=\"" << num(ml + pw - 150) << "\" cy=\"" << num(ly - 4)
      << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
    o << "<text x=\"" << num(ml + pw - 140) << "\" y=\"" << num(ly)
      << "\" font-family=\"monospace\" font-size=\"11\">" << escape(s.label)
      << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace afdx
