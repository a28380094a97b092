#pragma once

#include <string>
#include <vector>

namespace pvlab::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::string label;
  std::string color = "#d62728";
};

/// Horizontal band spanning [x0, x1] behind the data (phase shading).
struct Band {
  double x0 = 0.0;
  double x1 = 0.0;
  std::string color;
  std::string label;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;
  std::vector<Band> bands;
};

/// Panels stacked vertically in one self-contained SVG document with a fixed
/// layout (no fonts or scripts pulled from outside).
std::string render(const std::vector<Panel>& panels, double width = 760.0, double panel_height = 260.0);

/// Fixed palette, indexed modulo its size.
const std::string& palette(std::size_t k);

}  // namespace pvlab::svg
