#pragma once

// Minimal hand-written SVG output for the CEP and sensitivity plots.
// Coordinates are printed with fixed precision so files are byte-stable.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surrocep {

struct PlotRange {
  double lo = 0.0;
  double hi = 1.0;

  static PlotRange of(const std::vector<double>& values, double pad = 0.05);
  double span() const { return hi - lo; }
};

class SvgPlot;
std::string stack_svg(const std::vector<SvgPlot>& plots);

class SvgPlot {
 public:
  SvgPlot(int width, int height, PlotRange x, PlotRange y);

  void polyline(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::string& color, double width = 1.5,
                const std::string& dash = "");
  /// Closed band between two curves over the same x values.
  void band(const Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
            const std::string& color, double opacity = 0.2);
  void hline(double y, const std::string& color, const std::string& dash = "4,3");
  void segment(double x0, double y0, double x1, double y1, const std::string& color, double width = 1.0);
  void marker(double x, double y, const std::string& color, double r = 3.0);
  void axes(const std::string& x_label, const std::string& y_label, int ticks = 5);
  void title(const std::string& text);
  void legend(const std::vector<std::pair<std::string, std::string>>& entries);

  std::string str() const;

 private:
  friend std::string stack_svg(const std::vector<SvgPlot>& plots);

  double px(double x) const;
  double py(double y) const;

  int width_;
  int height_;
  PlotRange x_;
  PlotRange y_;
  std::vector<std::string> body_;
};

/// Stacks several plots vertically into one document.
std::string stack_svg(const std::vector<SvgPlot>& plots);

/// Gaussian kernel density estimate with Silverman's bandwidth.
Eigen::VectorXd kernel_density(const std::vector<double>& sample, const Eigen::VectorXd& at);

/// Qualitative palette, cycled.
const std::string& palette(std::size_t i);

}  // namespace surrocep
