#include "surrocep/griddy.hpp"

namespace surrocep::detail {

void check_log_value(double v) {
  if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
    throw NonFiniteTarget("log target returned NaN or +inf");
  }
}

std::pair<int, int> high_density_range(const std::vector<double>& mass, double fraction) {
  std::vector<int> order(mass.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mass[static_cast<std::size_t>(a)] > mass[static_cast<std::size_t>(b)];
  });
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  double acc = 0.0;
  int first = order.front();
  int last = order.front();
  for (int i : order) {
    acc += mass[static_cast<std::size_t>(i)];
    first = std::min(first, i);
    last = std::max(last, i);
    if (acc >= fraction * total) break;
  }
  return {first, last};
}

double draw_from_cells(const CellMasses& cells, Rng& rng) {
  const double top = *std::max_element(cells.log_mass.begin(), cells.log_mass.end());
  std::vector<double> cum(cells.log_mass.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cells.log_mass.size(); ++i) {
    acc += std::exp(cells.log_mass[i] - top);
    cum[i] = acc;
  }
  const double u = uniform01(rng) * acc;
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) --it;
  const auto k = static_cast<std::size_t>(it - cum.begin());
  const double lo = cells.edges[k];
  const double hi = cells.edges[k + 1];
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace surrocep::detail
