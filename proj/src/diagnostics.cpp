#include "surrocep/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "surrocep/errors.hpp"
#include "surrocep/samplers.hpp"

namespace surrocep {

bool ConvergenceReport::all_converged() const {
  return std::none_of(entries.begin(), entries.end(), [](const ConvergenceEntry& e) { return e.flagged; });
}

double split_rhat(const Eigen::VectorXd& chain) {
  const Eigen::Index half = chain.size() / 2;
  if (half < 2) throw TooFewDraws("split R-hat needs at least four draws");
  const Eigen::VectorXd a = chain.head(half);
  const Eigen::VectorXd b = chain.segment(chain.size() - half, half);
  const double n = static_cast<double>(half);
  const double ma = a.mean();
  const double mb = b.mean();
  const double va = (a.array() - ma).square().sum() / (n - 1.0);
  const double vb = (b.array() - mb).square().sum() / (n - 1.0);
  const double within = 0.5 * (va + vb);
  const double grand = 0.5 * (ma + mb);
  const double between = n * ((ma - grand) * (ma - grand) + (mb - grand) * (mb - grand));
  if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

ConvergenceReport convergence_report(const PosteriorDraws& draws, double threshold) {
  if (draws.size() < kMinDrawsForDiagnostics) {
    throw TooFewDraws("convergence report needs at least " + std::to_string(kMinDrawsForDiagnostics) + " draws");
  }
  ConvergenceReport report;
  for (std::size_t j = 0; j < draws.names.size(); ++j) {
    TraceSeries t;
    t.name = draws.names[j];
    t.iteration = draws.iterations;
    t.value = draws.values.col(static_cast<Eigen::Index>(j));
    const double r = split_rhat(t.value);
    report.entries.push_back({t.name, r, !(r <= threshold)});
    report.traces.push_back(std::move(t));
  }
  return report;
}

double batch_means_se(const Eigen::VectorXd& chain, int batches) {
  const Eigen::Index n = chain.size();
  if (n < 2) return 0.0;
  batches = static_cast<int>(std::min<Eigen::Index>(batches, n / 2));
  if (batches < 2) {
    const double m = chain.mean();
    return std::sqrt((chain.array() - m).square().sum() / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  const Eigen::Index len = n / batches;
  Eigen::VectorXd means(batches);
  for (int b = 0; b < batches; ++b) means(b) = chain.segment(b * len, len).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / (batches - 1.0);
  return std::sqrt(var / batches);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace surrocep
