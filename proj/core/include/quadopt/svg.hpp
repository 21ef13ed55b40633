#pragma once

// Self-contained SVG charts. The plotted numbers are repeated inside an XML
// comment so the files double as data tables.

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace quadopt {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// One polyline per series. The x axis spans [0, x_max].
std::string line_plot_svg(std::string_view title, std::string_view x_label,
                          std::string_view y_label, std::span<const Series> series,
                          double x_max);

/// One box (quartiles, whiskers at min/max, median line) per group.
std::string box_plot_svg(std::string_view title, std::string_view y_label,
                         std::span<const std::string> labels,
                         std::span<const std::vector<double>> groups);

/// Minimal well-formedness check: a single <svg> root, balanced and properly
/// nested tags, quoted attributes, terminated comments. On failure `why`
/// receives a short reason.
bool svg_well_formed(std::string_view text, std::string* why = nullptr);

}  // namespace quadopt
