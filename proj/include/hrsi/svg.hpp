#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hrsi {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

/// Self-contained SVG with the panels laid out on a grid. Non-finite points
/// (and non-positive ones on log axes) are skipped. The plotted data is
/// repeated in an XML comment so the file can be checked without a viewer.
std::string render_svg(const std::vector<Panel>& panels, std::size_t columns = 2);

}  // namespace hrsi
