#pragma once

// Simulation lab: data generators for the five reference settings, the
// DMD-like scenario and user-supplied parameter files, outcome noise
// families, the full-counterfactual oracle and the replication harness.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surrocep/data.hpp"
#include "surrocep/model.hpp"
#include "surrocep/samplers.hpp"

namespace surrocep {

enum class NoiseFamily { Gaussian, StudentT, Gamma };

/// Outcome errors are L u with L the Cholesky factor of the target
/// covariance and u iid with mean 0, variance 1 drawn from the family.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Gaussian;
  double df = 5.0;     // StudentT
  double shape = 2.0;  // Gamma (centred and scaled)
};

NoiseSpec parse_noise(const std::string& text);
std::string to_string(const NoiseSpec& noise);

struct CovariateDist {
  enum class Kind { Normal, Bernoulli, Uniform };
  std::string name;  // column name including the x_ prefix
  Kind kind = Kind::Normal;
  double a = 0.0;  // mean, p or lower bound
  double b = 1.0;  // sd or upper bound
};

/// Generative parameters of one column of the reference table, verbatim.
struct ReferenceColumn {
  std::optional<double> sigma_x;  // absent for the binary covariate
  std::optional<double> delta4;
  std::array<double, 6> omega{};
  std::array<double, 3> eps{};
  double theta10 = 0.0;
  double theta11 = 0.0;
  double theta_t = 0.0;
  bool binary_x = false;
};

/// Published validation values for a setting (absent where not reported).
struct PublishedGammas {
  std::optional<double> gamma0_o;
  std::optional<double> gamma1_o;
  std::optional<double> gamma0_d;
  std::optional<double> gamma1_d;
  /// Subgroup values keyed by estimand column name (e.g. "gamma0@1").
  std::map<std::string, double> conditional;
};

struct SimSetting {
  std::string name;
  std::vector<CovariateDist> covariates;
  CovariateBasis basis;
  Eigen::Matrix<double, 3, Eigen::Dynamic> coefs;  // rows S(1), T(0), T(1)
  Eigen::Vector3d sds = Eigen::Vector3d::Ones();
  CorrelationState corr = CorrelationState::conditionally_independent(0.0, 0.0);
  int baseline_column = 0;
  NoiseSpec noise;
  std::optional<ReferenceColumn> reference;
  PublishedGammas published;
  /// Points at which subgroup gamma0(x) is reported by default.
  std::vector<Eigen::VectorXd> report_at;

  std::vector<std::string> covariate_names() const;
  /// Conditional generative spec; the covariate model is Normal/Bernoulli for a
  /// single such covariate and empty otherwise.
  ModelSpec truth_spec() const;
  void validate() const;
};

/// Names accepted by preset_setting.
const std::vector<std::string>& preset_names();
/// Settings A-E exactly as tabulated, theta10 included. The tabulated theta10
/// matches thetaT * theta11 only to two decimals.
SimSetting preset_setting(const std::string& name);

using KeyValues = std::map<std::string, std::string>;

/// Flat "key = value" text; '#' starts a comment.
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

/// Artifact-chosen generator values for the DMD-like scenario.
KeyValues default_dmd_config();
/// Throws IncompleteConfig when a required key is missing.
SimSetting dmd_scenario(const KeyValues& config);
/// Single-covariate setting from reference-table style keys
/// (sigma_x, delta4, omega1..omega6, eps_s1, eps_t0, eps_t1, theta11, theta_t[, theta10]).
SimSetting custom_setting(const KeyValues& config);
/// Preset name, "DMD", or a parameter file path.
SimSetting resolve_setting(const std::string& name_or_path);

struct SimulatedTrial {
  CounterfactualTable full;
  Dataset masked;
};

/// n must be even; the first n/2 subjects are assigned z = 0.
SimulatedTrial generate(const SimSetting& setting, Index n, std::uint64_t seed);

struct OracleFit {
  double gamma0 = 0.0;  // marginal line of T(1)-T(0) on S(1)
  double gamma1 = 0.0;
  double gamma0_se = 0.0;
  double gamma1_se = 0.0;
  /// Conditional designs: coefficients of [basis terms..., S(1)].
  std::optional<Eigen::VectorXd> conditional;
  std::optional<Eigen::VectorXd> conditional_se;
  CovariateBasis basis;

  double gamma1_conditional() const;
  double gamma0_at(const Eigen::VectorXd& x) const;
};

/// Least-squares fit on complete counterfactual data. Difference-from-baseline
/// designs regress T^D(1) - T^D(0), which equals T(1) - T(0).
OracleFit oracle_fit(const CounterfactualTable& table, Design design, const CovariateBasis& basis = {},
                     int baseline_column = 0);

struct ReplicationConfig {
  SimSetting setting;
  Index n = 100;
  int reps = 100;
  Algorithm algorithm = Algorithm::ObservedData;
  FitOptions fit;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = SURROCEP_THREADS or hardware concurrency
  bool scale_by_oracle = false;
  Index truth_n = 1000000;
};

struct EstimandSummary {
  std::string estimand;
  double truth = 0.0;
  std::optional<double> published;
  double mean = 0.0;
  double bias = 0.0;
  double se = 0.0;  // average posterior sd
  std::optional<double> sd;  // sd of point estimates, absent for a single replication
  double coverage = 0.0;
  double covers_zero = 0.0;
  std::optional<double> oracle_sd;
  std::optional<double> scaled_bias;
  std::optional<double> scaled_se;
  std::optional<double> scaled_sd;
};

struct ReplicationSummary {
  std::string setting;
  Design design = Design::OriginalConditional;
  bool ci = true;
  int reps = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<EstimandSummary> estimands;

  const EstimandSummary& at(const std::string& estimand) const;
  /// Long format: setting,design,estimand,metric,value.
  void write_long(std::ostream& out) const;
};

/// Per-replication posterior means and interval verdicts, kept for tests
/// that compare replications across generators.
struct ReplicationDetail {
  bool ok = false;
  std::string error;
  std::map<std::string, PosteriorSummary> posterior;
};

int default_thread_count();

ReplicationSummary run_replications(const ReplicationConfig& config, std::vector<ReplicationDetail>* details = nullptr);

/// Estimands reported for a fit: subgroup gamma0(x) columns, gamma1, and the
/// marginal pair for conditional designs; gamma0/gamma1 for marginal designs.
std::vector<std::string> estimand_names(const FitOptions& fit);

/// "valid" when the gamma1 interval excludes 0 and the gamma0 interval covers 0.
bool surrogate_valid(const PosteriorSummary& gamma0, const PosteriorSummary& gamma1);

}  // namespace surrocep
