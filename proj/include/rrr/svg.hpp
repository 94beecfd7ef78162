#pragma once

#include <string>
#include <vector>

namespace rrr {

// Minimal SVG line charts: axes, ticks, one polyline per series, legend.
// Enough for recovery-rate / mean-rank / ratio curves without any plotting
// dependency. Non-finite points split the polyline rather than aborting.

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
  int width = 880;
  int height = 560;
  bool markers = true;
};

std::string render_line_chart(const ChartSpec& spec);
void write_line_chart(const std::string& path, const ChartSpec& spec);

}  // namespace rrr
