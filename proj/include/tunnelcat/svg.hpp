#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tunnelcat/artifacts.hpp"

namespace tunnelcat {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;  // empty picks from the default palette
};

struct Axes {
  std::string title;
  std::string x_label = "t";
  std::string y_label = "P";
  std::optional<std::pair<double, double>> y_range;  // default: data range
  int width = 720;
  int height = 440;
};

/// Standalone SVG document with one polyline per series, axis ticks and
/// labels, and a legend. Throws std::invalid_argument for an empty series
/// list or a series whose x and y lengths differ.
std::string render_svg(const std::vector<Series>& series, const Axes& axes);

/// render_svg written to `path`; throws std::runtime_error if unwritable.
void emit_svg(const std::vector<Series>& series, const Axes& axes,
              const std::filesystem::path& path);

/// One series per y column, sharing the x column. Labels are the column names
/// unless `labels` supplies replacements.
std::vector<Series> series_from_table(const CsvTable& table, const std::string& x_column,
                                      const std::vector<std::string>& y_columns,
                                      const std::vector<std::string>& labels = {});

}  // namespace tunnelcat
