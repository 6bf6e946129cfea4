#pragma once

// Potential-outcome model for (S(1), T(0), T(1)) given baseline covariates,
// the four endpoint/covariate analysis designs, and the CEP validation
// metrics gamma0 / gamma1.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "surrocep/data.hpp"
#include "surrocep/mvn.hpp"

namespace surrocep {

/// Outcome order used throughout.
inline constexpr int kS1 = 0;
inline constexpr int kT0 = 1;
inline constexpr int kT1 = 2;

enum class Design {
  OriginalMarginal = 1,
  OriginalConditional = 2,
  DiffMarginal = 3,
  DiffConditional = 4,
};

Design design_from_int(int d);
int to_int(Design d);
std::string to_string(Design d);
inline bool is_conditional(Design d) { return d == Design::OriginalConditional || d == Design::DiffConditional; }
inline EndpointMode endpoint_mode(Design d) {
  return (d == Design::DiffMarginal || d == Design::DiffConditional) ? EndpointMode::DiffFromBaseline
                                                                      : EndpointMode::Original;
}

/// Mean-structure terms: intercept, each raw covariate, then squares of the
/// raw covariates listed in `quadratic`.
struct CovariateBasis {
  std::vector<std::string> raw_names;
  std::vector<int> quadratic;

  static CovariateBasis intercept_only() { return {}; }
  static CovariateBasis linear(std::vector<std::string> names) { return {std::move(names), {}}; }

  Index n_raw() const { return static_cast<Index>(raw_names.size()); }
  Index dim() const { return 1 + n_raw() + static_cast<Index>(quadratic.size()); }
  bool intercept_only_basis() const { return dim() == 1; }

  template <typename Derived>
  Eigen::VectorXd expand(const Eigen::MatrixBase<Derived>& raw) const {
    if (raw.size() != n_raw()) throw IndexOutOfRange("covariate vector has wrong length");
    Eigen::VectorXd w(dim());
    w(0) = 1.0;
    for (Index j = 0; j < n_raw(); ++j) w(1 + j) = raw(j);
    for (std::size_t q = 0; q < quadratic.size(); ++q) {
      const double v = raw(quadratic[q]);
      w(1 + n_raw() + static_cast<Index>(q)) = v * v;
    }
    return w;
  }

  /// Design matrix rows for a covariate matrix (n x n_raw).
  Eigen::MatrixXd expand_rows(const Eigen::MatrixXd& raw) const;
  std::vector<std::string> term_names() const;
};

struct NormalCovariate {
  double mean = 0.0;
  double sd = 1.0;
};
struct BernoulliCovariate {
  double p = 0.5;
};
struct EmpiricalCovariate {
  Eigen::MatrixXd rows;  // n x n_raw
};
using CovariateModel = std::variant<std::monostate, NormalCovariate, BernoulliCovariate, EmpiricalCovariate>;

struct ModelSpec {
  Design design = Design::OriginalConditional;
  CovariateBasis basis;
  /// Rows S(1), T(0), T(1); one column per basis term.
  Eigen::Matrix<double, 3, Eigen::Dynamic> coefs;
  /// Residual standard deviations (epsilon, or sigma for marginal specs).
  Eigen::Vector3d sds = Eigen::Vector3d::Ones();
  CorrelationState corr = CorrelationState::conditionally_independent(0.0, 0.0);
  CovariateModel covariate;
  /// Raw covariate holding the pre-treatment measurement of T.
  int baseline_column = 0;

  bool ci_assumed() const { return corr.ci(); }
  Eigen::Matrix3d covariance() const { return sds.asDiagonal() * corr.matrix() * sds.asDiagonal(); }

  template <typename Derived>
  Eigen::Vector3d mean_at(const Eigen::MatrixBase<Derived>& raw) const {
    return coefs * basis.expand(raw);
  }
  Eigen::Vector3d mean() const;  // intercept-only specs
  GaussianJoint<double> joint_at(const Eigen::VectorXd& raw) const;
};

enum class MetricScope { Marginal, Conditional };

struct ValidationMetrics {
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  MetricScope scope = MetricScope::Marginal;
};

/// gamma1 = (Cov(T1,S1) - Cov(T0,S1)) / Var(S1), gamma0 = (mu_T1 - mu_T0) - gamma1 mu_S1.
ValidationMetrics gamma_from_joint(const GaussianJoint<double>& joint);
ValidationMetrics gamma_from_marginal(const ModelSpec& spec);
ValidationMetrics gamma_conditional(const ModelSpec& spec, const Eigen::VectorXd& x);
/// Slope of the conditional CEP line; does not depend on x.
double gamma1_conditional(const Eigen::Vector3d& sds, const CorrelationState& corr);

double apply_ci_constraint(double theta_t, double theta11);
double ci_deviation(const ModelSpec& spec);

/// Joint of (S(1), T(0), T(1), X) for a spec with one Normal covariate and
/// linear mean terms.
GaussianJoint<double> four_variate_joint(const ModelSpec& spec);
/// Integrates a Normal covariate out of a conditional spec.
ModelSpec collapse_over_x(const ModelSpec& spec);
/// Switches a conditional spec between original and difference-from-baseline
/// endpoints by shifting the baseline slope of T(0) and T(1).
ModelSpec endpoint_transform(const ModelSpec& spec, EndpointMode mode);

struct CepCurve {
  Eigen::VectorXd s_grid;
  Eigen::VectorXd expected_diff;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::optional<Eigen::VectorXd> conditioning;  // empty = marginal
};

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

LineFit least_squares_line(const Eigen::VectorXd& s, const Eigen::VectorXd& y);

inline constexpr int kCepGridPoints = 41;
inline constexpr int kGaussHermiteNodes = 64;

/// Marginal mean and sd of S(1) implied by the spec and its covariate model.
std::pair<double, double> surrogate_moments(const ModelSpec& spec);
Eigen::VectorXd default_s_grid(const ModelSpec& spec, int points = kCepGridPoints);

/// E(T(1) - T(0) | S(1) = s) averaged over f(x | S(1) = s).
CepCurve marginalize_cep(const ModelSpec& spec, const std::optional<Eigen::VectorXd>& s_grid = std::nullopt);
CepCurve conditional_cep(const ModelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& s_grid);
/// Marginal gamma0/gamma1 from the least-squares line through marginalize_cep.
ValidationMetrics marginal_metrics(const ModelSpec& spec);

/// Gauss-Hermite nodes and weights for weight function exp(-t^2).
const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gauss_hermite(int n);

struct TreatmentEffect {
  double estimate = 0.0;
  double se = 0.0;
};

/// Least-squares treatment effect (beta1/beta3/beta6/beta8) for the design.
TreatmentEffect treatment_effect(const Dataset& data, Design design, const CovariateBasis& basis,
                                 int baseline_column = 0);

}  // namespace surrocep
