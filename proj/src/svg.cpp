#include "rrr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rrr/errors.hpp"

namespace rrr {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2"};
constexpr int kPaletteSize = 10;

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range data_range(const ChartSpec& spec, bool x_axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : spec.series) {
    const auto& v = x_axis ? s.x : s.y;
    for (double t : v) {
      if (!std::isfinite(t)) continue;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  const double pad = 0.04 * (hi - lo);
  return {lo - pad, hi + pad};
}

// Round tick spacing to 1/2/5 times a power of ten.
double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(target_ticks, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double nice = 10.0;
  if (frac <= 1.0) {
    nice = 1.0;
  } else if (frac <= 2.0) {
    nice = 2.0;
  } else if (frac <= 5.0) {
    nice = 5.0;
  }
  return nice * mag;
}

std::string trim_number(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_line_chart(const ChartSpec& spec) {
  const int W = spec.width;
  const int H = spec.height;
  const double left = 70, right = 30, top = 46, bottom = 56;
  const double plot_w = W - left - right;
  const double plot_h = H - top - bottom;
  const Range rx = data_range(spec, true);
  const Range ry = data_range(spec, false);
  auto px = [&](double x) {
    return left + (x - rx.lo) / (rx.hi - rx.lo) * plot_w;
  };
  auto py = [&](double y) {
    return top + plot_h - (y - ry.lo) / (ry.hi - ry.lo) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << escape_xml(spec.title) << "</text>\n";

  // Frame.
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  // Ticks and grid lines.
  const double sx = nice_step(rx.hi - rx.lo, 6);
  for (double t = std::ceil(rx.lo / sx) * sx; t <= rx.hi + 1e-12 * sx;
       t += sx) {
    const double x = px(t);
    out << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x
        << "\" y2=\"" << top + plot_h
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << trim_number(t) << "</text>\n";
  }
  const double sy = nice_step(ry.hi - ry.lo, 6);
  for (double t = std::ceil(ry.lo / sy) * sy; t <= ry.hi + 1e-12 * sy;
       t += sy) {
    const double y = py(t);
    out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\""
        << left + plot_w << "\" y2=\"" << y
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << trim_number(t) << "</text>\n";
  }

  // Axis labels.
  out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << H - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << escape_xml(spec.x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << top + plot_h / 2 << ")\">" << escape_xml(spec.y_label)
      << "</text>\n";

  // Series.
  for (size_t s = 0; s < spec.series.size(); ++s) {
    const auto& ser = spec.series[s];
    const char* color = kPalette[s % kPaletteSize];
    std::ostringstream pts;
    bool in_segment = false;
    const size_t npts = std::min(ser.x.size(), ser.y.size());
    for (size_t i = 0; i < npts; ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) {
        if (in_segment) {
          out << "<polyline fill=\"none\" stroke=\"" << color
              << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
          pts.str("");
          in_segment = false;
        }
        continue;
      }
      pts << px(ser.x[i]) << "," << py(ser.y[i]) << " ";
      in_segment = true;
      if (spec.markers) {
        out << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i])
            << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
      }
    }
    if (in_segment) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
    }
  }

  // Legend.
  double ly = top + 14;
  for (size_t s = 0; s < spec.series.size(); ++s) {
    const char* color = kPalette[s % kPaletteSize];
    const double lx = left + plot_w - 150;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\""
        << lx + 22 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << lx + 28 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(spec.series[s].label) << "</text>\n";
    ly += 17;
  }

  out << "</svg>\n";
  return out.str();
}

void write_line_chart(const std::string& path, const ChartSpec& spec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << render_line_chart(spec);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace rrr
