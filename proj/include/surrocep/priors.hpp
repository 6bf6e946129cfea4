#pragma once

#include <string>
#include <variant>

#include "surrocep/mvn.hpp"
#include "surrocep/rng.hpp"

namespace surrocep {

struct UniformInterval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Beta(a, b) stretched from (0, 1) onto (lo, hi).
struct ScaledTruncatedBeta {
  double a = 5.0;
  double b = 6.0;
  double lo = -0.4;
  double hi = 1.0;
};

struct PointMass {
  double value = 0.0;
};

struct VagueNormal {
  double mean = 0.0;
  double sd = 100.0;
};

using PriorKind = std::variant<UniformInterval, ScaledTruncatedBeta, PointMass, VagueNormal>;

enum class PriorTarget { Coefficient, StandardDeviation, Theta11, Theta10, ThetaT };

class PriorSpec {
 public:
  PriorSpec(PriorKind kind, PriorTarget target);

  const PriorKind& kind() const { return kind_; }
  PriorTarget target() const { return target_; }
  bool is_point_mass() const { return std::holds_alternative<PointMass>(kind_); }

  double log_density(double v) const;
  double cdf(double v) const;
  double sample(Rng& rng) const;
  double mean() const;
  /// Closed support; a point mass has lo == hi.
  Interval support() const;
  std::string describe() const;

 private:
  PriorKind kind_;
  PriorTarget target_;
};

/// Parses "uniform(lo,hi)", "beta(a,b,lo,hi)", "point(v)" or "normal(m,sd)".
PriorSpec parse_prior(const std::string& text, PriorTarget target);

struct PriorSet {
  PriorSpec theta11{UniformInterval{-1.0, 1.0}, PriorTarget::Theta11};
  PriorSpec theta10{UniformInterval{-1.0, 1.0}, PriorTarget::Theta10};
  PriorSpec theta_t{ScaledTruncatedBeta{5.0, 6.0, -0.4, 1.0}, PriorTarget::ThetaT};
  /// Prior on every mean coefficient.
  VagueNormal coefficient{0.0, 100.0};
};

}  // namespace surrocep
