#pragma once

#include <string>
#include <vector>

namespace seqot::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;  ///< polyline; markers only when false
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 640;
  int height = 400;
};

/// Static SVG document with axes, five ticks per axis, one colour per
/// series and a legend. Non-finite points are skipped.
std::string render(const Plot& plot);

}  // namespace seqot::svg
