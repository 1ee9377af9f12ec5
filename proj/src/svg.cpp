#include "rpi_forge/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rpi_forge/error.hpp"

namespace rpi_forge::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Piecewise-linear ramp through five viridis-like stops.
std::string ramp(double t) {
  static constexpr std::array<std::array<int, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(3, static_cast<int>(t));
  const double f = t - k;
  char buf[16];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[k][c] + f * (stops[k + 1][c] - stops[k][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
         fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                 const std::string& extra = "") {
  return "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" text-anchor=\"" + anchor + "\"" +
         extra + ">" + escape(s) + "</text>\n";
}

}  // namespace

std::string format_number(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string render(const Heatmap& h) {
  const auto rows = h.values.rows();
  const auto cols = h.values.cols();
  require(rows > 0 && cols > 0, ErrorCode::kInvalidArgument, "svg heatmap: empty table");
  require(static_cast<Eigen::Index>(h.row_labels.size()) == rows &&
              static_cast<Eigen::Index>(h.col_labels.size()) == cols,
          ErrorCode::kDimensionMismatch, "svg heatmap: label count");
  const double cell_w = 64.0, cell_h = 36.0, left = 90.0, top = 50.0;
  const double width = left + cols * cell_w + 20.0;
  const double height = top + rows * cell_h + 60.0;

  const auto level = [&](double v) {
    return h.log_color ? std::copysign(std::log10(1.0 + std::abs(v)), v) : v;
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < h.values.size(); ++i) {
    const double v = level(h.values(i));
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::ostringstream out;
  out << header(width, height);
  out << text(width / 2, 24, h.title, "middle", " font-size=\"15\"");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double y = top + r * cell_h;
    out << text(left - 8, y + cell_h / 2 + 4, h.row_labels[r], "end");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double x = left + c * cell_w;
      const double v = h.values(r, c);
      const bool ok = std::isfinite(v);
      const double t = ok && hi > lo ? (level(v) - lo) / (hi - lo) : 0.5;
      out << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"" << fixed(cell_w)
          << "\" height=\"" << fixed(cell_h) << "\" fill=\"" << (ok ? ramp(t) : "#bbbbbb")
          << "\" stroke=\"#ffffff\"/>\n";
      if (ok)
        out << text(x + cell_w / 2, y + cell_h / 2 + 4, fixed(v, 2), "middle",
                    t > 0.6 ? " fill=\"#000000\"" : " fill=\"#ffffff\"");
    }
  }
  const double base = top + rows * cell_h;
  for (Eigen::Index c = 0; c < cols; ++c)
    out << text(left + c * cell_w + cell_w / 2, base + 16, h.col_labels[c]);
  out << text(left + cols * cell_w / 2, base + 40, h.col_title);
  out << text(16, top + rows * cell_h / 2, h.row_title, "middle",
              " transform=\"rotate(-90 16 " + fixed(top + rows * cell_h / 2) + ")\"");
  out << "</svg>\n";
  return out.str();
}

std::string render(const LinePlot& p) {
  require(!p.x.empty() && !p.series.empty(), ErrorCode::kInvalidArgument, "svg plot: empty table");
  for (const auto& s : p.series)
    require(s.y.size() == p.x.size(), ErrorCode::kDimensionMismatch, "svg plot: series length");
  const double width = 520.0, height = 360.0;
  const double left = 70.0, right = 20.0, top = 40.0, bottom = 50.0;
  const double pw = width - left - right, ph = height - top - bottom;

  const auto [xmin_it, xmax_it] = std::minmax_element(p.x.begin(), p.x.end());
  const double xmin = *xmin_it, xmax = *xmax_it;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& s : p.series)
    for (const double v : s.y)
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const auto sx = [&](double x) { return xmax > xmin ? left + pw * (x - xmin) / (xmax - xmin) : left + pw / 2; };
  const auto sy = [&](double y) { return top + ph * (ymax - y) / (ymax - ymin); };

  std::ostringstream out;
  out << header(width, height);
  out << text(width / 2, 24, p.title, "middle", " font-size=\"15\"");
  out << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(pw)
      << "\" height=\"" << fixed(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    out << text(left - 6, sy(yv) + 4, format_number(yv, 3), "end");
    out << text(sx(xv), top + ph + 16, format_number(xv, 3));
  }
  out << text(left + pw / 2, height - 10, p.x_label);
  out << text(16, top + ph / 2, p.y_label, "middle",
              " transform=\"rotate(-90 16 " + fixed(top + ph / 2) + ")\"");
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& series = p.series[s];
    out << "<polyline fill=\"none\" stroke=\"" << series.color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < p.x.size(); ++k) {
      if (!std::isfinite(series.y[k])) continue;
      out << (first ? "" : " ") << fixed(sx(p.x[k])) << "," << fixed(sy(series.y[k]));
      first = false;
    }
    out << "\"/>\n";
    const double ly = top + 16 + 16.0 * static_cast<double>(s);
    out << "<line x1=\"" << fixed(left + 10) << "\" y1=\"" << fixed(ly - 4) << "\" x2=\""
        << fixed(left + 30) << "\" y2=\"" << fixed(ly - 4) << "\" stroke=\"" << series.color
        << "\" stroke-width=\"2\"/>\n";
    out << text(left + 36, ly, series.name, "start");
  }
  out << "</svg>\n";
  return out.str();
}

void write_file(const std::string& content, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  out << content;
}

}  // namespace rpi_forge::svg
