#include "pvlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pvlab::svg {

namespace {

constexpr double kLeft = 70.0, kRight = 150.0, kTop = 30.0, kBottom = 45.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

void draw_panel(std::ostringstream& os, const Panel& p, double top, double width, double height) {
  Range xr, yr;
  for (const auto& s : p.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  for (const auto& m : p.markers) {
    xr.add(m.x);
    yr.add(m.y);
  }
  xr.finish();
  yr.finish();
  yr.lo = std::min(yr.lo, 0.0);
  yr.hi += 0.05 * (yr.hi - yr.lo);

  const double x0 = kLeft, x1 = width - kRight;
  const double y0 = top + kTop, y1 = top + height - kBottom;
  auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
  auto sy = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

  for (const auto& b : p.bands) {
    os << "<rect x=\"" << num(sx(b.x0)) << "\" y=\"" << num(y0) << "\" width=\"" << num(sx(b.x1) - sx(b.x0))
       << "\" height=\"" << num(y1 - y0) << "\" fill=\"" << b.color << "\" fill-opacity=\"0.18\"/>\n";
  }
  os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
     << num(y1 - y0) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << num(x0) << "\" y=\"" << num(top + 18) << "\" font-size=\"14\" font-weight=\"bold\">"
     << escape(p.title) << "</text>\n";

  const double xs = nice_step(xr.hi - xr.lo), ys = nice_step(yr.hi - yr.lo);
  for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + 1e-9 * xs; v += xs) {
    os << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(sx(v)) << "\" y2=\""
       << num(y1 + 4) << "\" stroke=\"#333\"/><text x=\"" << num(sx(v)) << "\" y=\"" << num(y1 + 16)
       << "\" font-size=\"10\" text-anchor=\"middle\">" << tick(std::abs(v) < 1e-12 * xs ? 0.0 : v) << "</text>\n";
  }
  for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi + 1e-9 * ys; v += ys) {
    os << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(x1) << "\" y2=\""
       << num(sy(v)) << "\" stroke=\"#ddd\"/><text x=\"" << num(x0 - 6) << "\" y=\"" << num(sy(v) + 3)
       << "\" font-size=\"10\" text-anchor=\"end\">" << tick(std::abs(v) < 1e-12 * ys ? 0.0 : v) << "</text>\n";
  }
  os << "<text x=\"" << num(0.5 * (x0 + x1)) << "\" y=\"" << num(y1 + 34)
     << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(p.x_label) << "</text>\n";
  os << "<text x=\"" << num(18) << "\" y=\"" << num(0.5 * (y0 + y1)) << "\" font-size=\"11\" text-anchor=\"middle\""
     << " transform=\"rotate(-90 18 " << num(0.5 * (y0 + y1)) << ")\">" << escape(p.y_label) << "</text>\n";

  double legend_y = y0 + 10;
  for (const auto& s : p.series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.4\" points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) os << (k ? " " : "") << num(sx(s.x[k])) << ',' << num(sy(s.y[k]));
    os << "\"/>\n";
    if (!s.label.empty()) {
      os << "<line x1=\"" << num(x1 + 10) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(x1 + 28)
         << "\" y2=\"" << num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/><text x=\""
         << num(x1 + 32) << "\" y=\"" << num(legend_y + 4) << "\" font-size=\"11\">" << escape(s.label)
         << "</text>\n";
      legend_y += 16;
    }
  }
  for (const auto& b : p.bands) {
    if (b.label.empty()) continue;
    os << "<text x=\"" << num(sx(b.x0) + 3) << "\" y=\"" << num(y1 - 4) << "\" font-size=\"9\" fill=\"#555\">"
       << escape(b.label) << "</text>\n";
  }
  for (const auto& m : p.markers) {
    os << "<circle cx=\"" << num(sx(m.x)) << "\" cy=\"" << num(sy(m.y)) << "\" r=\"4\" fill=\"" << m.color
       << "\"/>\n";
    if (!m.label.empty()) {
      os << "<text x=\"" << num(sx(m.x) + 6) << "\" y=\"" << num(sy(m.y) - 6) << "\" font-size=\"10\" fill=\""
         << m.color << "\">" << escape(m.label) << "</text>\n";
    }
  }
}

}  // namespace

const std::string& palette(std::size_t k) {
  static const std::vector<std::string> colors{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return colors[k % colors.size()];
}

std::string render(const std::vector<Panel>& panels, double width, double panel_height) {
  std::ostringstream os;
  const double height = panel_height * static_cast<double>(std::max<std::size_t>(1, panels.size()));
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    draw_panel(os, panels[k], panel_height * static_cast<double>(k), width, panel_height);
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pvlab::svg
