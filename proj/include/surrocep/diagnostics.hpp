#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surrocep {

struct PosteriorDraws;

struct TraceSeries {
  std::string name;
  std::vector<int> iteration;
  Eigen::VectorXd value;
};

struct ConvergenceEntry {
  std::string name;
  double rhat = 1.0;
  bool flagged = false;
};

struct ConvergenceReport {
  std::vector<TraceSeries> traces;
  std::vector<ConvergenceEntry> entries;

  bool all_converged() const;
};

inline constexpr int kMinDrawsForDiagnostics = 100;
inline constexpr double kRhatThreshold = 1.1;

/// Potential scale reduction of a single chain split into two halves.
/// A chain that is constant throughout reports 1.
double split_rhat(const Eigen::VectorXd& chain);

/// Trace series and split-R-hat for every column; throws TooFewDraws below 100 draws.
ConvergenceReport convergence_report(const PosteriorDraws& draws, double threshold = kRhatThreshold);

/// Monte Carlo standard error of the mean by non-overlapping batch means.
double batch_means_se(const Eigen::VectorXd& chain, int batches = 25);

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace surrocep
