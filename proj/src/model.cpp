#include "surrocep/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace surrocep {

Design design_from_int(int d) {
  if (d < 1 || d > 4) throw InputError("design must be 1, 2, 3 or 4 (got " + std::to_string(d) + ")");
  return static_cast<Design>(d);
}

int to_int(Design d) { return static_cast<int>(d); }

std::string to_string(Design d) {
  switch (d) {
    case Design::OriginalMarginal: return "original-marginal";
    case Design::OriginalConditional: return "original-conditional";
    case Design::DiffMarginal: return "diff-marginal";
    case Design::DiffConditional: return "diff-conditional";
  }
  return "unknown";
}

Eigen::MatrixXd CovariateBasis::expand_rows(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != n_raw()) throw IndexOutOfRange("covariate matrix has wrong column count");
  Eigen::MatrixXd w(raw.rows(), dim());
  w.col(0).setOnes();
  if (n_raw() > 0) w.middleCols(1, n_raw()) = raw;
  for (std::size_t q = 0; q < quadratic.size(); ++q) {
    w.col(1 + n_raw() + static_cast<Index>(q)) = raw.col(quadratic[q]).array().square().matrix();
  }
  return w;
}

std::vector<std::string> CovariateBasis::term_names() const {
  std::vector<std::string> out{"1"};
  for (const auto& n : raw_names) out.push_back(n);
  for (int q : quadratic) out.push_back(raw_names.at(static_cast<std::size_t>(q)) + "^2");
  return out;
}

Eigen::Vector3d ModelSpec::mean() const {
  if (!basis.intercept_only_basis()) throw InputError("spec has covariate terms; use mean_at(x)");
  return coefs.col(0);
}

GaussianJoint<double> ModelSpec::joint_at(const Eigen::VectorXd& raw) const {
  return GaussianJoint<double>(mean_at(raw), covariance());
}

ValidationMetrics gamma_from_joint(const GaussianJoint<double>& joint) {
  if (joint.dim() != 3) throw IndexOutOfRange("expected the (S(1), T(0), T(1)) joint");
  const auto& s = joint.covariance;
  if (!(s(kS1, kS1) > 0.0)) throw DegenerateVariance("Var(S(1)) <= 0");
  ValidationMetrics m;
  m.gamma1 = (s(kT1, kS1) - s(kT0, kS1)) / s(kS1, kS1);
  m.gamma0 = (joint.mean(kT1) - joint.mean(kT0)) - m.gamma1 * joint.mean(kS1);
  m.scope = MetricScope::Marginal;
  return m;
}

ValidationMetrics gamma_from_marginal(const ModelSpec& spec) {
  if (!spec.basis.intercept_only_basis()) throw InputError("gamma_from_marginal needs a spec without covariate terms");
  return gamma_from_joint(GaussianJoint<double>(spec.mean(), spec.covariance()));
}

double gamma1_conditional(const Eigen::Vector3d& sds, const CorrelationState& corr) {
  if (!(sds(kS1) > 0.0)) throw DegenerateVariance("epsilon_S1 <= 0");
  return (corr.theta11() * sds(kT1) - corr.theta10() * sds(kT0)) / sds(kS1);
}

ValidationMetrics gamma_conditional(const ModelSpec& spec, const Eigen::VectorXd& x) {
  ValidationMetrics m;
  m.gamma1 = gamma1_conditional(spec.sds, spec.corr);
  const Eigen::Vector3d mu = spec.mean_at(x);
  m.gamma0 = (mu(kT1) - mu(kT0)) - m.gamma1 * mu(kS1);
  m.scope = MetricScope::Conditional;
  return m;
}

double apply_ci_constraint(double theta_t, double theta11) { return theta_t * theta11; }

double ci_deviation(const ModelSpec& spec) {
  return spec.corr.theta10() - spec.corr.thetaT() * spec.corr.theta11();
}

namespace {

const NormalCovariate& require_scalar_normal(const ModelSpec& spec, const char* what) {
  const auto* normal = std::get_if<NormalCovariate>(&spec.covariate);
  if (normal == nullptr || spec.basis.n_raw() != 1 || !spec.basis.quadratic.empty()) {
    throw InputError(std::string(what) + " needs one Normal covariate entering linearly");
  }
  return *normal;
}

Design marginal_counterpart(Design d) {
  switch (d) {
    case Design::OriginalConditional: return Design::OriginalMarginal;
    case Design::DiffConditional: return Design::DiffMarginal;
    default: return d;
  }
}

}  // namespace

GaussianJoint<double> four_variate_joint(const ModelSpec& spec) {
  const auto& cov = require_scalar_normal(spec, "four_variate_joint");
  const Eigen::Vector3d slope = spec.coefs.col(1);
  const double var_x = cov.sd * cov.sd;
  Eigen::Vector4d mean;
  mean.head<3>() = spec.coefs.col(0) + slope * cov.mean;
  mean(3) = cov.mean;
  Eigen::Matrix4d s;
  s.topLeftCorner<3, 3>() = spec.covariance() + slope * slope.transpose() * var_x;
  s.topRightCorner<3, 1>() = slope * var_x;
  s.bottomLeftCorner<1, 3>() = slope.transpose() * var_x;
  s(3, 3) = var_x;
  return GaussianJoint<double>(mean, s);
}

ModelSpec collapse_over_x(const ModelSpec& spec) {
  const GaussianJoint<double> joint = four_variate_joint(spec);
  const Eigen::Matrix3d s = joint.covariance.topLeftCorner(3, 3);
  ModelSpec out;
  out.design = marginal_counterpart(spec.design);
  out.basis = CovariateBasis::intercept_only();
  out.coefs = joint.mean.head(3);
  out.sds = s.diagonal().cwiseSqrt();
  const Eigen::Matrix3d r = out.sds.cwiseInverse().asDiagonal() * s * out.sds.cwiseInverse().asDiagonal();
  out.corr = CorrelationState::unconstrained(r(kS1, kT1), r(kS1, kT0), r(kT0, kT1));
  out.covariate = std::monostate{};
  out.baseline_column = -1;
  return out;
}

ModelSpec endpoint_transform(const ModelSpec& spec, EndpointMode mode) {
  if (endpoint_mode(spec.design) == mode) return spec;
  if (!is_conditional(spec.design)) {
    throw MissingBaseline("a marginal spec carries no baseline covariate; transform the conditional spec, then collapse");
  }
  if (std::holds_alternative<BernoulliCovariate>(spec.covariate)) {
    throw MissingBaseline("a binary covariate is not a baseline measurement of the outcome");
  }
  if (spec.baseline_column < 0 || spec.baseline_column >= spec.basis.n_raw()) {
    throw MissingBaseline("spec has no baseline covariate column");
  }
  ModelSpec out = spec;
  const Index term = 1 + spec.baseline_column;
  const double shift = mode == EndpointMode::DiffFromBaseline ? -1.0 : 1.0;
  out.coefs(kT0, term) += shift;
  out.coefs(kT1, term) += shift;
  out.design = mode == EndpointMode::DiffFromBaseline ? Design::DiffConditional : Design::OriginalConditional;
  return out;
}

LineFit least_squares_line(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  if (s.size() != y.size() || s.size() < 2) throw IndexOutOfRange("line fit needs two or more matching points");
  const double sm = s.mean();
  const double ym = y.mean();
  const double sxx = (s.array() - sm).square().sum();
  if (!(sxx > 0.0)) throw DegenerateVariance("line fit over a constant grid");
  LineFit f;
  f.slope = ((s.array() - sm) * (y.array() - ym)).sum() / sxx;
  f.intercept = ym - f.slope * sm;
  return f;
}

const std::pair<Eigen::VectorXd, Eigen::VectorXd>& gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw QuadratureFailure("node count must be positive");
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix of the Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Eigen::VectorXd nodes = es.eigenvalues();
  Eigen::VectorXd weights = std::sqrt(std::numbers::pi) * es.eigenvectors().row(0).transpose().array().square();
  return cache.emplace(n, std::make_pair(std::move(nodes), std::move(weights))).first->second;
}

namespace {

// Covariate support points with prior weights (summing to one).
struct CovariateNodes {
  Eigen::MatrixXd x;  // m x n_raw
  Eigen::VectorXd w;
};

CovariateNodes covariate_nodes(const ModelSpec& spec) {
  CovariateNodes out;
  const Index p = spec.basis.n_raw();
  if (std::holds_alternative<std::monostate>(spec.covariate)) {
    if (p != 0) throw InputError("conditional spec needs a covariate model to marginalize");
    out.x.resize(1, 0);
    out.w = Eigen::VectorXd::Ones(1);
  } else if (const auto* nrm = std::get_if<NormalCovariate>(&spec.covariate)) {
    if (p != 1) throw InputError("Normal covariate model needs exactly one raw covariate");
    const auto& [t, wt] = gauss_hermite(kGaussHermiteNodes);
    out.x = (nrm->mean + std::sqrt(2.0) * nrm->sd * t.array()).matrix();
    out.w = wt / std::sqrt(std::numbers::pi);
  } else if (const auto* bern = std::get_if<BernoulliCovariate>(&spec.covariate)) {
    if (p != 1) throw InputError("Bernoulli covariate model needs exactly one raw covariate");
    out.x.resize(2, 1);
    out.x << 0.0, 1.0;
    out.w.resize(2);
    out.w << 1.0 - bern->p, bern->p;
  } else {
    const auto& emp = std::get<EmpiricalCovariate>(spec.covariate);
    if (emp.rows.cols() != p || emp.rows.rows() == 0) throw InputError("empirical covariate sample has wrong shape");
    out.x = emp.rows;
    out.w = Eigen::VectorXd::Constant(emp.rows.rows(), 1.0 / static_cast<double>(emp.rows.rows()));
  }
  return out;
}

}  // namespace

std::pair<double, double> surrogate_moments(const ModelSpec& spec) {
  const CovariateNodes nodes = covariate_nodes(spec);
  const Eigen::MatrixXd w = spec.basis.expand_rows(nodes.x);
  const Eigen::VectorXd mu = w * spec.coefs.row(kS1).transpose();
  const double total = nodes.w.sum();
  const double m = nodes.w.dot(mu) / total;
  const double v = nodes.w.dot((mu.array() - m).square().matrix()) / total;
  return {m, std::sqrt(spec.sds(kS1) * spec.sds(kS1) + v)};
}

Eigen::VectorXd default_s_grid(const ModelSpec& spec, int points) {
  const auto [m, sd] = surrogate_moments(spec);
  return Eigen::VectorXd::LinSpaced(points, m - 3.0 * sd, m + 3.0 * sd);
}

CepCurve marginalize_cep(const ModelSpec& spec, const std::optional<Eigen::VectorXd>& s_grid) {
  const CovariateNodes nodes = covariate_nodes(spec);
  CepCurve curve;
  curve.s_grid = s_grid ? *s_grid : default_s_grid(spec);
  const Eigen::MatrixXd w = spec.basis.expand_rows(nodes.x);
  const Eigen::MatrixXd mu = w * spec.coefs.transpose();  // m x 3
  const double g1 = gamma1_conditional(spec.sds, spec.corr);
  const Eigen::VectorXd g0 = (mu.col(kT1) - mu.col(kT0)) - g1 * mu.col(kS1);
  const double inv_var = 1.0 / (spec.sds(kS1) * spec.sds(kS1));
  const Eigen::ArrayXd log_prior = nodes.w.array().log();
  curve.expected_diff.resize(curve.s_grid.size());
  for (Index i = 0; i < curve.s_grid.size(); ++i) {
    const double s = curve.s_grid(i);
    const Eigen::ArrayXd logw = log_prior - 0.5 * inv_var * (s - mu.col(kS1).array()).square();
    const double top = logw.maxCoeff();
    const Eigen::ArrayXd wt = (logw - top).exp();
    const double z = wt.sum();
    if (!std::isfinite(top) || !(z > 0.0) || !std::isfinite(z)) throw QuadratureFailure("covariate weights degenerate at s");
    curve.expected_diff(i) = (wt * g0.array()).sum() / z + g1 * s;
  }
  curve.lower = curve.expected_diff;
  curve.upper = curve.expected_diff;
  return curve;
}

CepCurve conditional_cep(const ModelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& s_grid) {
  const ValidationMetrics m = gamma_conditional(spec, x);
  CepCurve curve;
  curve.s_grid = s_grid;
  curve.expected_diff = (m.gamma0 + m.gamma1 * s_grid.array()).matrix();
  curve.lower = curve.expected_diff;
  curve.upper = curve.expected_diff;
  curve.conditioning = x;
  return curve;
}

ValidationMetrics marginal_metrics(const ModelSpec& spec) {
  const CepCurve c = marginalize_cep(spec);
  const LineFit f = least_squares_line(c.s_grid, c.expected_diff);
  return {f.intercept, f.slope, MetricScope::Marginal};
}

TreatmentEffect treatment_effect(const Dataset& data, Design design, const CovariateBasis& basis, int baseline_column) {
  const Dataset d = endpoint_transform(data, endpoint_mode(design), baseline_column);
  const Index n = static_cast<Index>(d.size());
  const Index extra = is_conditional(design) ? basis.dim() - 1 : 0;
  const Index k = 2 + extra;
  Eigen::MatrixXd xmat(n, k);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = d.records[static_cast<std::size_t>(i)];
    const auto& t = r.z == 0 ? r.t0 : r.t1;
    if (!t) throw DataFormatError("record " + r.id + " has no observed true endpoint");
    y(i) = *t;
    xmat(i, 0) = 1.0;
    xmat(i, 1) = r.z;
    if (extra > 0) xmat.row(i).tail(extra) = basis.expand(r.x).tail(extra).transpose();
  }
  if (n <= k) throw RankDeficient("not enough records for the treatment-effect model");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xmat);
  if (qr.rank() < k) throw RankDeficient("treatment-effect design matrix is rank deficient");
  const Eigen::VectorXd beta = qr.solve(y);
  const double sigma2 = (y - xmat * beta).squaredNorm() / static_cast<double>(n - k);
  const Eigen::MatrixXd xtx_inv = (xmat.transpose() * xmat).inverse();
  return {beta(1), std::sqrt(sigma2 * xtx_inv(1, 1))};
}

}  // namespace surrocep
