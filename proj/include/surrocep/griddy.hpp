#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "surrocep/errors.hpp"
#include "surrocep/mvn.hpp"
#include "surrocep/rng.hpp"

namespace surrocep {

struct GridConfig {
  int coarse = 100;
  int fine = 100;
  /// Probability mass of the coarse cells that get re-gridded at fine resolution.
  double fine_fraction = 0.8;
};

namespace detail {

// Piecewise-constant density over consecutive cells [edges[i], edges[i+1]).
struct CellMasses {
  std::vector<double> edges;
  std::vector<double> log_mass;
};

double draw_from_cells(const CellMasses& cells, Rng& rng);
// Indices [first, last] of the contiguous coarse range holding the top
// `fraction` of mass.
std::pair<int, int> high_density_range(const std::vector<double>& mass, double fraction);
void check_log_value(double v);

}  // namespace detail

namespace detail {

enum class Edge { None, Low, High, Both };

// One grid pass. When more than 99% of the coarse mass sits in the two
// outermost cells nothing is drawn and the crowded side is reported.
template <typename LogTarget>
std::pair<double, Edge> griddy_attempt(LogTarget& log_target, const Interval& support, const GridConfig& cfg,
                                       Rng& rng) {
  if (support.empty()) throw InputError("griddy Gibbs support is empty");
  if (cfg.coarse < 10 || cfg.fine < 10) throw InputError("griddy Gibbs grids need at least 10 points");
  const int m = cfg.coarse;
  const double h = support.width() / m;
  std::vector<double> coarse_log(static_cast<std::size_t>(m));
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double v = log_target(support.lo + (i + 0.5) * h);
    check_log_value(v);
    coarse_log[static_cast<std::size_t>(i)] = v;
    top = std::max(top, v);
  }
  if (!std::isfinite(top)) throw NonFiniteTarget("target has no mass on the grid");
  std::vector<double> mass(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) mass[static_cast<std::size_t>(i)] = std::exp(coarse_log[static_cast<std::size_t>(i)] - top);
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if ((mass.front() + mass.back()) / total > 0.99) {
    if (mass.front() / total > 0.99) return {0.0, Edge::Low};
    if (mass.back() / total > 0.99) return {0.0, Edge::High};
    return {0.0, Edge::Both};
  }
  const auto [first, last] = high_density_range(mass, cfg.fine_fraction);

  CellMasses cells;
  const double log_h = std::log(h);
  for (int i = 0; i < first; ++i) {
    cells.edges.push_back(support.lo + i * h);
    cells.log_mass.push_back(coarse_log[static_cast<std::size_t>(i)] + log_h);
  }
  const double region_lo = support.lo + first * h;
  const double region_hi = support.lo + (last + 1) * h;
  const double hf = (region_hi - region_lo) / cfg.fine;
  const double log_hf = std::log(hf);
  for (int j = 0; j < cfg.fine; ++j) {
    const double v = log_target(region_lo + (j + 0.5) * hf);
    check_log_value(v);
    cells.edges.push_back(region_lo + j * hf);
    cells.log_mass.push_back(v + log_hf);
  }
  for (int i = last + 1; i < m; ++i) {
    cells.edges.push_back(support.lo + i * h);
    cells.log_mass.push_back(coarse_log[static_cast<std::size_t>(i)] + log_h);
  }
  cells.edges.push_back(support.hi);
  return {draw_from_cells(cells, rng), Edge::None};
}

}  // namespace detail

/// One griddy Gibbs draw of a scalar from exp(log_target) restricted to
/// `support`. The coarse grid is refined over its high-density cells and the
/// draw inverts the resulting piecewise-constant CDF with uniform jitter
/// inside the chosen cell.
template <typename LogTarget>
double griddy_gibbs_draw(LogTarget&& log_target, const Interval& support, const GridConfig& cfg, Rng& rng) {
  const auto [draw, edge] = detail::griddy_attempt(log_target, support, cfg, rng);
  if (edge != detail::Edge::None) throw AllMassAtBoundary("more than 99% of mass in the outermost grid cells");
  return draw;
}

/// griddy_gibbs_draw that, when the target is crowded against one end of the
/// support, re-grids the two cells at that end (up to `max_zooms` times)
/// instead of failing. The discarded remainder carries under 1% of the mass.
template <typename LogTarget>
double griddy_gibbs_draw_zoomed(LogTarget&& log_target, Interval support, const GridConfig& cfg, Rng& rng,
                                int max_zooms = 4) {
  for (int zoom = 0;; ++zoom) {
    const auto [draw, edge] = detail::griddy_attempt(log_target, support, cfg, rng);
    if (edge == detail::Edge::None) return draw;
    if (edge == detail::Edge::Both || zoom == max_zooms) {
      throw AllMassAtBoundary("more than 99% of mass in the outermost grid cells");
    }
    const double span = 2.0 * support.width() / cfg.coarse;
    support = edge == detail::Edge::Low ? Interval{support.lo, support.lo + span} : Interval{support.hi - span, support.hi};
  }
}

}  // namespace surrocep
