#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

/// Minimal deterministic SVG charts: the same table always yields the same bytes.
namespace rpi_forge::svg {

struct Heatmap {
  std::string title;
  std::string row_title;
  std::string col_title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;  // NaN cells are drawn grey and unlabeled
  bool log_color = false;  // colour by sign(v) log10(1 + |v|)
};

struct Series {
  std::string name;
  std::vector<double> y;
  std::string color;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<Series> series;
};

std::string render(const Heatmap& h);
std::string render(const LinePlot& p);

/// Formats with printf-style "%.*g" in the C locale.
std::string format_number(double v, int digits = 4);

void write_file(const std::string& content, const std::string& path);

}  // namespace rpi_forge::svg
