#include "surrocep/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "surrocep/data.hpp"

namespace surrocep {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_correlation(PriorTarget t) {
  return t == PriorTarget::Theta11 || t == PriorTarget::Theta10 || t == PriorTarget::ThetaT;
}

}  // namespace

PriorSpec::PriorSpec(PriorKind kind, PriorTarget target) : kind_(std::move(kind)), target_(target) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval>) {
          if (!(k.lo < k.hi)) throw InputError("uniform prior needs lo < hi");
        } else if constexpr (std::is_same_v<K, ScaledTruncatedBeta>) {
          if (!(k.lo < k.hi)) throw InputError("beta prior needs lo < hi");
          if (!(k.a > 0.0 && k.b > 0.0)) throw InputError("beta prior needs a, b > 0");
        } else if constexpr (std::is_same_v<K, PointMass>) {
          if (target != PriorTarget::ThetaT && target != PriorTarget::Theta10) {
            throw InputError("point-mass priors are only allowed on thetaT or theta10");
          }
        } else {
          if (!(k.sd > 0.0)) throw InputError("normal prior needs sd > 0");
        }
      },
      kind_);
  if (is_correlation(target)) {
    const Interval s = support();
    if (s.lo < -1.0 || s.hi > 1.0 || (is_point_mass() && !(std::abs(s.lo) < 1.0))) {
      throw InputError("correlation prior support must lie within (-1, 1)");
    }
    if (std::holds_alternative<VagueNormal>(kind_)) throw InputError("correlation priors must be bounded");
  }
}

double PriorSpec::log_density(double v) const {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval>) {
          return (v >= k.lo && v <= k.hi) ? -std::log(k.hi - k.lo) : kNegInf;
        } else if constexpr (std::is_same_v<K, ScaledTruncatedBeta>) {
          const double u = (v - k.lo) / (k.hi - k.lo);
          if (!(u > 0.0 && u < 1.0)) return kNegInf;
          return (k.a - 1.0) * std::log(u) + (k.b - 1.0) * std::log1p(-u) -
                 (std::lgamma(k.a) + std::lgamma(k.b) - std::lgamma(k.a + k.b)) - std::log(k.hi - k.lo);
        } else if constexpr (std::is_same_v<K, PointMass>) {
          return v == k.value ? 0.0 : kNegInf;
        } else {
          const double z = (v - k.mean) / k.sd;
          return -0.5 * z * z - std::log(k.sd) - 0.5 * std::log(2.0 * std::numbers::pi);
        }
      },
      kind_);
}

double PriorSpec::cdf(double v) const {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval>) {
          return std::clamp((v - k.lo) / (k.hi - k.lo), 0.0, 1.0);
        } else if constexpr (std::is_same_v<K, ScaledTruncatedBeta>) {
          const double u = (v - k.lo) / (k.hi - k.lo);
          if (u <= 0.0) return 0.0;
          if (u >= 1.0) return 1.0;
          return boost::math::ibeta(k.a, k.b, u);
        } else if constexpr (std::is_same_v<K, PointMass>) {
          return v >= k.value ? 1.0 : 0.0;
        } else {
          return 0.5 * std::erfc(-(v - k.mean) / (k.sd * std::numbers::sqrt2));
        }
      },
      kind_);
}

double PriorSpec::sample(Rng& rng) const {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval>) {
          return k.lo + (k.hi - k.lo) * uniform01(rng);
        } else if constexpr (std::is_same_v<K, ScaledTruncatedBeta>) {
          const double ga = std::gamma_distribution<double>(k.a, 1.0)(rng);
          const double gb = std::gamma_distribution<double>(k.b, 1.0)(rng);
          return k.lo + (k.hi - k.lo) * ga / (ga + gb);
        } else if constexpr (std::is_same_v<K, PointMass>) {
          return k.value;
        } else {
          return k.mean + k.sd * standard_normal(rng);
        }
      },
      kind_);
}

double PriorSpec::mean() const {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval>) {
          return 0.5 * (k.lo + k.hi);
        } else if constexpr (std::is_same_v<K, ScaledTruncatedBeta>) {
          return k.lo + (k.hi - k.lo) * k.a / (k.a + k.b);
        } else if constexpr (std::is_same_v<K, PointMass>) {
          return k.value;
        } else {
          return k.mean;
        }
      },
      kind_);
}

Interval PriorSpec::support() const {
  return std::visit(
      [&](const auto& k) -> Interval {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval> || std::is_same_v<K, ScaledTruncatedBeta>) {
          return {k.lo, k.hi};
        } else if constexpr (std::is_same_v<K, PointMass>) {
          return {k.value, k.value};
        } else {
          return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        }
      },
      kind_);
}

std::string PriorSpec::describe() const {
  return std::visit(
      [&](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, UniformInterval>) {
          return "uniform(" + format_double(k.lo) + ";" + format_double(k.hi) + ")";
        } else if constexpr (std::is_same_v<K, ScaledTruncatedBeta>) {
          return "beta(" + format_double(k.a) + ";" + format_double(k.b) + ";" + format_double(k.lo) + ";" +
                 format_double(k.hi) + ")";
        } else if constexpr (std::is_same_v<K, PointMass>) {
          return "point(" + format_double(k.value) + ")";
        } else {
          return "normal(" + format_double(k.mean) + ";" + format_double(k.sd) + ")";
        }
      },
      kind_);
}

PriorSpec parse_prior(const std::string& text, PriorTarget target) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw InputError("cannot parse prior '" + text + "'");
  }
  const std::string name = text.substr(0, open);
  // Arguments may be separated by ',' or ';' (the latter keeps them CSV-safe).
  std::string inner = text.substr(open + 1, close - open - 1);
  std::replace(inner.begin(), inner.end(), ';', ',');
  std::vector<double> args;
  std::string field;
  std::istringstream body(inner);
  while (std::getline(body, field, ',')) args.push_back(parse_double(field));
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw InputError("prior '" + name + "' takes " + std::to_string(n) + " arguments");
  };
  if (name == "uniform") {
    need(2);
    return PriorSpec(UniformInterval{args[0], args[1]}, target);
  }
  if (name == "beta") {
    need(4);
    return PriorSpec(ScaledTruncatedBeta{args[0], args[1], args[2], args[3]}, target);
  }
  if (name == "point") {
    need(1);
    return PriorSpec(PointMass{args[0]}, target);
  }
  if (name == "normal") {
    need(2);
    return PriorSpec(VagueNormal{args[0], args[1]}, target);
  }
  throw InputError("unknown prior '" + name + "' (expected uniform, beta, point or normal)");
}

}  // namespace surrocep
