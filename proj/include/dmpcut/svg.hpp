#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace dmpcut::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Log-log line plot with markers, one polyline per series.
void line_plot(std::ostream& out, const std::string& title, const std::string& x_label,
               const std::string& y_label, const std::vector<Series>& series);

/// Row-major heatmap of `values` (row 0 at the bottom) on [0,1]^2. Zero is
/// white, the maximum is dark red; NaN cells are grey.
void heatmap(std::ostream& out, const std::string& title, const Eigen::MatrixXd& values);

} // namespace dmpcut::svg
