#pragma once

// The two posterior samplers: the full imputation MCMC (missing potential
// outcomes drawn alongside the parameters, covariance handled as sd/correlation
// with griddy Gibbs updates) and the observed-data algorithm (per-arm
// regressions plus prior draws for the nonidentified correlations).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surrocep/data.hpp"
#include "surrocep/griddy.hpp"
#include "surrocep/model.hpp"
#include "surrocep/priors.hpp"

namespace surrocep {

struct ChainConfig {
  int n_iter = 3000;
  int burn_in = 500;
  std::uint64_t seed = 1;
  GridConfig grid;
  /// Keep the completed outcome matrix every k-th retained iteration (0 = never).
  int snapshot_every = 0;

  void validate() const;
  int retained() const { return n_iter - burn_in; }
};

enum class Algorithm { Imputation, ObservedData };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

/// What to fit: design, mean structure and whether S(1) _|_ T(0) | T(1) is imposed.
struct ModelTemplate {
  Design design = Design::OriginalConditional;
  /// Mean terms for conditional designs; raw names must match the data's
  /// covariate columns. Empty means "all columns, linear".
  CovariateBasis basis;
  bool ci = true;
  int baseline_column = 0;
};

struct FitOptions {
  ModelTemplate model;
  PriorSet priors;
  ChainConfig chain;
  /// Covariate points at which gamma0(x) is recorded (conditional designs).
  std::vector<Eigen::VectorXd> gamma0_at;
  /// Record gamma0/gamma1 of the CEP curve averaged over the empirical covariates.
  bool marginalize = true;
};

struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<int> iterations;
  Eigen::MatrixXd values;  // one row per retained iteration
  std::vector<Eigen::MatrixXd> imputed;

  Index size() const { return values.rows(); }
  bool has(const std::string& name) const;
  Index column(const std::string& name) const;
  Eigen::VectorXd series(const std::string& name) const { return values.col(column(name)); }

  void write_csv(std::ostream& out) const;
  static PosteriorDraws read_csv(std::istream& in);
};

std::string gamma0_name(const Eigen::VectorXd& x);
std::string coefficient_name(int outcome, const std::string& term);

/// Names of the headline (marginal) gamma0 / gamma1 columns in a draw set.
std::pair<std::string, std::string> headline_gamma_names(const PosteriorDraws& draws);

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double mc_se = 0.0;

  bool covers(double v) const { return q025 <= v && v <= q975; }
};

PosteriorSummary summarize(const Eigen::VectorXd& draws);
double quantile(std::vector<double> v, double p);

PosteriorDraws run_imputation_mcmc(const Dataset& data, const FitOptions& options);
PosteriorDraws run_observed_data_mcmc(const Dataset& data, const FitOptions& options);
PosteriorDraws run_mcmc(Algorithm algorithm, const Dataset& data, const FitOptions& options);

struct SensitivityRow {
  std::string label;
  double theta_t = 0.0;  // fixed value, or prior mean
  PosteriorSummary gamma0;
  PosteriorSummary gamma1;
};

/// One observed-data fit per thetaT prior (point masses fix thetaT), sorted by thetaT.
std::vector<SensitivityRow> sensitivity_scan(const Dataset& data, const FitOptions& base,
                                             const std::vector<PriorSpec>& theta_t_priors);

namespace detail {

struct AnalysisData {
  Eigen::MatrixXd w;    // design rows, n x k
  Eigen::MatrixXd y;    // n x 3 in (S1, T0, T1) order; NaN where not observed
  Eigen::MatrixXd raw;  // raw covariates, n x p
  std::vector<Index> arm0;
  std::vector<Index> arm1;
  CovariateBasis basis;
  Eigen::Vector3d sd_scale;  // observed sd of each outcome (support of the sd draws)
};

/// Reads only the slots a record's arm observes.
AnalysisData prepare(const Dataset& data, const ModelTemplate& model);

}  // namespace detail

}  // namespace surrocep
