#include "tunnelcat/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace tunnelcat {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#17becf", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
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

// Roughly five round-valued ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * span; v += step) {
    out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  }
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const Axes& axes) {
  if (series.empty()) throw std::invalid_argument("render_svg: no series to plot");
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("render_svg: series '" + s.label + "' has mismatched x and y");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) throw std::invalid_argument("render_svg: all series are empty");
  if (axes.y_range) std::tie(y0, y1) = *axes.y_range;
  if (x1 - x0 <= 0.0) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 <= 0.0) {
    const double pad = std::max(0.5, 0.1 * std::abs(y0));
    y0 -= pad;
    y1 += pad;
  }

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = axes.width - left - right;
  const double ph = axes.height - top - bottom;
  const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  const auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(axes.width) +
         "\" height=\"" + std::to_string(axes.height) + "\" viewBox=\"0 0 " +
         std::to_string(axes.width) + " " + std::to_string(axes.height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!axes.title.empty()) {
    out += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(axes.title) + "</text>\n";
  }
  out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double v : ticks(x0, x1)) {
    const std::string x = num(px(v));
    out += "<line x1=\"" + x + "\" y1=\"" + num(top + ph) + "\" x2=\"" + x + "\" y2=\"" +
           num(top + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + x + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" +
           tick_label(v) + "</text>\n";
  }
  for (double v : ticks(y0, y1)) {
    const std::string y = num(py(v));
    out += "<line x1=\"" + num(left - 5) + "\" y1=\"" + y + "\" x2=\"" + num(left) + "\" y2=\"" +
           y + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\">" +
           tick_label(v) + "</text>\n";
  }
  out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(axes.height - 12.0) +
         "\" text-anchor=\"middle\">" + escape(axes.x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num(top + ph / 2) + ")\">" + escape(axes.y_label) + "</text>\n";

  out += "<g fill=\"none\" stroke-width=\"1.6\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const std::string color = s.color.empty() ? kPalette[k % std::size(kPalette)] : s.color;
    out += "<polyline stroke=\"" + color + "\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out += ' ';
      out += num(px(s.x[i])) + "," + num(py(std::clamp(s.y[i], y0, y1)));
    }
    out += "\"/>\n";
  }
  out += "</g>\n";

  const double lx = left + pw + 15;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const std::string color = s.color.empty() ? kPalette[k % std::size(kPalette)] : s.color;
    const double ly = top + 10 + 20.0 * static_cast<double>(k);
    out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 22) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(lx + 28) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.label) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_svg(const std::vector<Series>& series, const Axes& axes,
              const std::filesystem::path& path) {
  write_text(path, render_svg(series, axes));
}

std::vector<Series> series_from_table(const CsvTable& table, const std::string& x_column,
                                      const std::vector<std::string>& y_columns,
                                      const std::vector<std::string>& labels) {
  if (!labels.empty() && labels.size() != y_columns.size()) {
    throw std::invalid_argument("series_from_table: one label per y column expected");
  }
  const std::vector<double> x = table.column_values(x_column);
  std::vector<Series> out;
  for (std::size_t i = 0; i < y_columns.size(); ++i) {
    out.push_back({labels.empty() ? y_columns[i] : labels[i], x,
                   table.column_values(y_columns[i]), ""});
  }
  return out;
}

}  // namespace tunnelcat
