#pragma once

// Minimal self-contained SVG emission for the two scaling panels. No
// external assets; every byte is produced here.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qot/errors.hpp"
#include "qot/serialize.hpp"

namespace qot {

namespace detail {

struct SvgCanvas {
  static constexpr double width = 640.0;
  static constexpr double height = 480.0;
  static constexpr double left = 70.0;
  static constexpr double right = 610.0;
  static constexpr double top = 50.0;
  static constexpr double bottom = 420.0;

  double y_min = 0.0, y_max = 1.0;
  std::string body;

  double x_at(std::size_t idx, std::size_t count) const {
    if (count <= 1) return 0.5 * (left + right);
    return left + (right - left) * static_cast<double>(idx) /
                      static_cast<double>(count - 1);
  }
  double y_at(double v) const {
    const double t = (v - y_min) / (y_max - y_min);
    return bottom - t * (bottom - top);
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double w = 1.0,
            const std::string& extra = "") {
    body += "<line x1=\"" + format_double(x1) + "\" y1=\"" + format_double(y1) +
            "\" x2=\"" + format_double(x2) + "\" y2=\"" + format_double(y2) +
            "\" stroke=\"" + stroke + "\" stroke-width=\"" + format_double(w) +
            "\" " + extra + "/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body += "<circle cx=\"" + format_double(x) + "\" cy=\"" + format_double(y) +
            "\" r=\"" + format_double(r) + "\" fill=\"" + fill + "\"/>\n";
  }
  void text(double x, double y, const std::string& s,
            const std::string& anchor = "middle", double size = 13.0) {
    body += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) +
            "\" font-family=\"sans-serif\" font-size=\"" + format_double(size) +
            "\" text-anchor=\"" + anchor + "\">" + s + "</text>\n";
  }

  void axes(const std::vector<int>& dims, const std::string& title,
            const std::string& ylabel) {
    line(left, bottom, right, bottom, "black", 1.5);
    line(left, bottom, left, top, "black", 1.5);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const double x = x_at(k, dims.size());
      line(x, bottom, x, bottom + 6, "black");
      text(x, bottom + 22, std::to_string(dims[k]));
    }
    for (int t = 0; t <= 5; ++t) {
      const double v = y_min + (y_max - y_min) * t / 5.0;
      const double y = y_at(v);
      line(left - 6, y, left, y, "black");
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3g", v);
      text(left - 10, y + 4, buf, "end", 12.0);
      line(left, y, right, y, "#dddddd", 0.5);
    }
    text(0.5 * (left + right), 28, title, "middle", 16.0);
    text(0.5 * (left + right), 455, "dimension d");
    body += "<text x=\"18\" y=\"" + format_double(0.5 * (top + bottom)) +
            "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
            "transform=\"rotate(-90 18 " + format_double(0.5 * (top + bottom)) +
            ")\">" + ylabel + "</text>\n";
  }

  std::string finish() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
           "height=\"480\" viewBox=\"0 0 640 480\">\n"
           "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n" +
           body + "</svg>\n";
  }
};

}  // namespace detail

/// Mean fitted exponent per dimension with +-1 std error bars and the
/// reference curve 1/(d+2).
inline std::string svg_beta_plot(const std::vector<int>& dims,
                                 const std::vector<double>& beta_mean,
                                 const std::vector<double>& beta_std) {
  if (dims.empty() || dims.size() != beta_mean.size() ||
      dims.size() != beta_std.size())
    throw InvalidInput("svg_beta_plot: inconsistent inputs");
  detail::SvgCanvas c;
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    hi = std::max(hi, beta_mean[k] + beta_std[k]);
    lo = std::min(lo, beta_mean[k] - beta_std[k]);
    hi = std::max(hi, 1.0 / (dims[k] + 2.0));
  }
  c.y_min = lo - 0.1 * (hi - lo) - 1e-12;
  c.y_max = hi + 0.1 * (hi - lo) + 1e-12;
  c.axes(dims, "fitted scaling exponent vs dimension", "beta");

  for (std::size_t k = 0; k + 1 < dims.size(); ++k)
    c.line(c.x_at(k, dims.size()), c.y_at(1.0 / (dims[k] + 2.0)),
           c.x_at(k + 1, dims.size()), c.y_at(1.0 / (dims[k + 1] + 2.0)),
           "#888888", 1.5, "stroke-dasharray=\"6 4\"");
  for (std::size_t k = 0; k < dims.size(); ++k)
    c.circle(c.x_at(k, dims.size()), c.y_at(1.0 / (dims[k] + 2.0)), 3.0,
             "#888888");

  for (std::size_t k = 0; k + 1 < dims.size(); ++k)
    c.line(c.x_at(k, dims.size()), c.y_at(beta_mean[k]),
           c.x_at(k + 1, dims.size()), c.y_at(beta_mean[k + 1]), "#1f77b4",
           2.0);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const double x = c.x_at(k, dims.size());
    c.line(x, c.y_at(beta_mean[k] - beta_std[k]), x,
           c.y_at(beta_mean[k] + beta_std[k]), "#1f77b4", 1.5);
    c.line(x - 5, c.y_at(beta_mean[k] - beta_std[k]), x + 5,
           c.y_at(beta_mean[k] - beta_std[k]), "#1f77b4", 1.5);
    c.line(x - 5, c.y_at(beta_mean[k] + beta_std[k]), x + 5,
           c.y_at(beta_mean[k] + beta_std[k]), "#1f77b4", 1.5);
    c.circle(x, c.y_at(beta_mean[k]), 4.0, "#1f77b4");
  }
  c.text(detail::SvgCanvas::right - 10, detail::SvgCanvas::top + 16,
         "measured (errorbars: 1 std)", "end");
  c.text(detail::SvgCanvas::right - 10, detail::SvgCanvas::top + 34,
         "reference 1/(d+2)", "end");
  return c.finish();
}

/// Relative deviation (d+2) * beta - 1 per dimension, with the zero line.
inline std::string svg_relerr_plot(const std::vector<int>& dims,
                                   const std::vector<double>& rel_err) {
  if (dims.empty() || dims.size() != rel_err.size())
    throw InvalidInput("svg_relerr_plot: inconsistent inputs");
  detail::SvgCanvas c;
  double lo = 0.0, hi = 0.0;
  for (double v : rel_err) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = std::max(hi - lo, 1e-6);
  c.y_min = lo - 0.15 * span;
  c.y_max = hi + 0.15 * span;
  c.axes(dims, "relative error of the fitted exponent", "(d+2) beta - 1");
  c.line(detail::SvgCanvas::left, c.y_at(0.0), detail::SvgCanvas::right,
         c.y_at(0.0), "#888888", 1.5, "stroke-dasharray=\"6 4\"");
  for (std::size_t k = 0; k + 1 < dims.size(); ++k)
    c.line(c.x_at(k, dims.size()), c.y_at(rel_err[k]),
           c.x_at(k + 1, dims.size()), c.y_at(rel_err[k + 1]), "#d62728", 2.0);
  for (std::size_t k = 0; k < dims.size(); ++k)
    c.circle(c.x_at(k, dims.size()), c.y_at(rel_err[k]), 4.0, "#d62728");
  return c.finish();
}

}  // namespace qot
