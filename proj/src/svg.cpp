#include "surrocep/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace surrocep {

namespace {

constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 45.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dash_attr(const std::string& dash) { return dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\""; }

}  // namespace

PlotRange PlotRange::of(const std::vector<double>& values, double pad) {
  PlotRange r{0.0, 1.0};
  bool any = false;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    if (!any) r = {v, v};
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
    any = true;
  }
  if (r.hi - r.lo < 1e-9) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double p = pad * (r.hi - r.lo);
  return {r.lo - p, r.hi + p};
}

SvgPlot::SvgPlot(int width, int height, PlotRange x, PlotRange y) : width_(width), height_(height), x_(x), y_(y) {}

double SvgPlot::px(double x) const {
  return kMarginLeft + (x - x_.lo) / x_.span() * (width_ - kMarginLeft - kMarginRight);
}

double SvgPlot::py(double y) const {
  return height_ - kMarginBottom - (y - y_.lo) / y_.span() * (height_ - kMarginTop - kMarginBottom);
}

void SvgPlot::polyline(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::string& color, double width,
                       const std::string& dash) {
  std::string pts;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i > 0) pts += ' ';
    pts += fmt(px(x(i))) + ',' + fmt(py(y(i)));
  }
  body_.push_back("<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) + "\"" +
                  dash_attr(dash) + " points=\"" + pts + "\"/>");
}

void SvgPlot::band(const Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                   const std::string& color, double opacity) {
  std::string pts;
  for (Eigen::Index i = 0; i < x.size(); ++i) pts += fmt(px(x(i))) + ',' + fmt(py(upper(i))) + ' ';
  for (Eigen::Index i = x.size() - 1; i >= 0; --i) {
    pts += fmt(px(x(i))) + ',' + fmt(py(lower(i)));
    if (i > 0) pts += ' ';
  }
  body_.push_back("<polygon fill=\"" + color + "\" fill-opacity=\"" + fmt(opacity) + "\" stroke=\"none\" points=\"" +
                  pts + "\"/>");
}

void SvgPlot::hline(double y, const std::string& color, const std::string& dash) {
  body_.push_back("<line x1=\"" + fmt(px(x_.lo)) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(px(x_.hi)) + "\" y2=\"" +
                  fmt(py(y)) + "\" stroke=\"" + color + "\"" + dash_attr(dash) + "/>");
}

void SvgPlot::segment(double x0, double y0, double x1, double y1, const std::string& color, double width) {
  body_.push_back("<line x1=\"" + fmt(px(x0)) + "\" y1=\"" + fmt(py(y0)) + "\" x2=\"" + fmt(px(x1)) + "\" y2=\"" +
                  fmt(py(y1)) + "\" stroke=\"" + color + "\" stroke-width=\"" + fmt(width) + "\"/>");
}

void SvgPlot::marker(double x, double y, const std::string& color, double r) {
  body_.push_back("<circle cx=\"" + fmt(px(x)) + "\" cy=\"" + fmt(py(y)) + "\" r=\"" + fmt(r) + "\" fill=\"" + color +
                  "\"/>");
}

void SvgPlot::axes(const std::string& x_label, const std::string& y_label, int ticks) {
  const double x0 = px(x_.lo);
  const double x1 = px(x_.hi);
  const double y0 = py(y_.lo);
  const double y1 = py(y_.hi);
  body_.push_back("<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
                  fmt(y0 - y1) + "\" fill=\"none\" stroke=\"#333\"/>");
  for (int i = 0; i <= ticks; ++i) {
    const double xv = x_.lo + x_.span() * i / ticks;
    const double yv = y_.lo + y_.span() * i / ticks;
    body_.push_back("<text x=\"" + fmt(px(xv)) + "\" y=\"" + fmt(y0 + 16) +
                    "\" font-size=\"11\" text-anchor=\"middle\">" + tick_label(xv) + "</text>");
    body_.push_back("<text x=\"" + fmt(x0 - 6) + "\" y=\"" + fmt(py(yv) + 4) +
                    "\" font-size=\"11\" text-anchor=\"end\">" + tick_label(yv) + "</text>");
  }
  body_.push_back("<text x=\"" + fmt(0.5 * (x0 + x1)) + "\" y=\"" + fmt(height_ - 8.0) +
                  "\" font-size=\"13\" text-anchor=\"middle\">" + escape(x_label) + "</text>");
  body_.push_back("<text x=\"14\" y=\"" + fmt(0.5 * (y0 + y1)) + "\" font-size=\"13\" text-anchor=\"middle\" "
                  "transform=\"rotate(-90 14 " + fmt(0.5 * (y0 + y1)) + ")\">" + escape(y_label) + "</text>");
}

void SvgPlot::title(const std::string& text) {
  body_.push_back("<text x=\"" + fmt(0.5 * width_) + "\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" +
                  escape(text) + "</text>");
}

void SvgPlot::legend(const std::vector<std::pair<std::string, std::string>>& entries) {
  double y = kMarginTop + 14.0;
  const double x = px(x_.hi) - 150.0;
  for (const auto& [label, color] : entries) {
    body_.push_back("<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y - 4) + "\" x2=\"" + fmt(x + 18) + "\" y2=\"" +
                    fmt(y - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>");
    body_.push_back("<text x=\"" + fmt(x + 24) + "\" y=\"" + fmt(y) + "\" font-size=\"11\">" + escape(label) +
                    "</text>");
    y += 15.0;
  }
}

std::string SvgPlot::str() const { return stack_svg({*this}); }

std::string stack_svg(const std::vector<SvgPlot>& plots) {
  int width = 0;
  int height = 0;
  for (const auto& p : plots) {
    width = std::max(width, p.width_);
    height += p.height_;
  }
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int offset = 0;
  for (const auto& p : plots) {
    out << "<g transform=\"translate(0 " << offset << ")\">\n";
    for (const auto& line : p.body_) out << line << '\n';
    out << "</g>\n";
    offset += p.height_;
  }
  out << "</svg>\n";
  return out.str();
}

Eigen::VectorXd kernel_density(const std::vector<double>& sample, const Eigen::VectorXd& at) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(at.size());
  const auto n = static_cast<double>(sample.size());
  if (sample.size() < 2) return d;
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sample) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double h = sd > 0.0 ? 1.06 * sd * std::pow(n, -0.2) : 1.0;
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    double acc = 0.0;
    for (double v : sample) {
      const double u = (at(i) - v) / h;
      acc += std::exp(-0.5 * u * u);
    }
    d(i) = acc * norm;
  }
  return d;
}

const std::string& palette(std::size_t i) {
  static const std::vector<std::string> colors = {"#1b6ca8", "#d1495b", "#2e933c", "#8e5ea2", "#e08e0b", "#3a3a3a"};
  return colors[i % colors.size()];
}

}  // namespace surrocep
