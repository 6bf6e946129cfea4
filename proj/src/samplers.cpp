#include "surrocep/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "surrocep/diagnostics.hpp"

namespace surrocep {

namespace {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSdFloor = 1e-4;
constexpr double kSdSupportFactor = 10.0;
constexpr int kMaxRejections = 10000;
const Interval kCorrelationRange{-1.0, 1.0};

const char* outcome_label(int j) {
  switch (j) {
    case kS1: return "s1";
    case kT0: return "t0";
    default: return "t1";
  }
}

// Draw of vec(B) for Y = W B + E, rows of E ~ N(0, sigma), independent
// Normal(prior.mean, prior.sd^2) priors on every entry of B (k x d).
Eigen::MatrixXd draw_coefficients(const Eigen::MatrixXd& wtw, const Eigen::MatrixXd& wty, const SmallMat& sigma,
                                  const VagueNormal& prior, Rng& rng) {
  const Index k = wtw.rows();
  const Index d = sigma.rows();
  const SmallMat sigma_inv = sigma.llt().solve(SmallMat::Identity(d, d));
  const double prior_prec = 1.0 / (prior.sd * prior.sd);
  Eigen::MatrixXd prec(k * d, k * d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) prec.block(a * k, b * k, k, k) = sigma_inv(a, b) * wtw;
  }
  prec.diagonal().array() += prior_prec;
  const Eigen::MatrixXd rhs_mat = wty * sigma_inv;
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(rhs_mat.data(), k * d);
  rhs.array() += prior.mean * prior_prec;
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) throw ChainDiverged("coefficient posterior precision is not positive definite");
  Eigen::VectorXd draw = llt.solve(rhs);
  Eigen::VectorXd z(k * d);
  for (Index i = 0; i < k * d; ++i) z(i) = standard_normal(rng);
  draw += llt.matrixU().solve(z);
  return Eigen::Map<Eigen::MatrixXd>(draw.data(), k, d);
}

// -n/2 log det R - 1/2 tr(R^{-1} scaled) for a correlation matrix R.
double correlation_loglik(const SmallMat& r, const SmallMat& scaled, double n) {
  Eigen::LLT<SmallMat> llt(r);
  if (llt.info() != Eigen::Success) return kNegInf;
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(logdet)) return kNegInf;
  return -0.5 * n * logdet - 0.5 * llt.solve(scaled).trace();
}

// Log-likelihood in the standard deviations for fixed R^{-1} and scatter S.
double sd_loglik(const SmallMat& r_inv_times_s, const SmallVec& sds, double n) {
  const SmallVec inv = sds.cwiseInverse();
  return -n * sds.array().log().sum() - 0.5 * inv.dot(r_inv_times_s * inv);
}

// Draws every sd in `sds` in turn by griddy Gibbs under Uniform priors.
void draw_sds(SmallVec& sds, const SmallMat& corr, const SmallMat& scatter, double n, const SmallVec& scale,
              const GridConfig& grid, Rng& rng) {
  const Index d = sds.size();
  const SmallMat r_inv = corr.llt().solve(SmallMat::Identity(d, d));
  const SmallMat weighted = r_inv.cwiseProduct(scatter);
  for (Index j = 0; j < d; ++j) {
    SmallVec trial = sds;
    auto target = [&](double v) {
      trial(j) = v;
      return sd_loglik(weighted, trial, n);
    };
    const Interval support{kSdFloor, kSdSupportFactor * scale(j)};
    sds(j) = griddy_gibbs_draw_zoomed(target, support, grid, rng);
  }
}

SmallMat scaled_scatter(const SmallMat& scatter, const SmallVec& sds) {
  const SmallVec inv = sds.cwiseInverse();
  return inv.asDiagonal() * scatter * inv.asDiagonal();
}

Eigen::Matrix3d corr_matrix(double t11, double t10, double tt) {
  Eigen::Matrix3d r;
  r << 1.0, t10, t11, t10, 1.0, tt, t11, tt, 1.0;
  return r;
}

Interval correlation_support(const Interval& pd, const PriorSpec& prior) {
  return pd.intersect(prior.support()).intersect(kCorrelationRange).shrunk();
}

double observed_sd(const Eigen::MatrixXd& y, int col) {
  std::vector<double> v;
  for (Index i = 0; i < y.rows(); ++i) {
    if (!std::isnan(y(i, col))) v.push_back(y(i, col));
  }
  if (v.size() < 2) return 1.0;
  const Eigen::Map<Eigen::VectorXd> m(v.data(), static_cast<Index>(v.size()));
  const double mean = m.mean();
  const double sd = std::sqrt((m.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
  return sd > 1e-3 ? sd : 1.0;
}

// Least-squares start for coefficients; falls back to intercept = mean.
Eigen::MatrixXd initial_coefficients(const Eigen::MatrixXd& w, const Eigen::MatrixXd& y) {
  const Index k = w.cols();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, y.cols());
  if (w.rows() > k) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
    if (qr.rank() == k) return qr.solve(y);
  }
  if (w.rows() > 0) b.row(0) = y.colwise().mean();
  return b;
}

double clamp_correlation(double v) { return std::clamp(v, -0.9, 0.9); }

// Starting correlations that respect the priors' supports and positive definiteness.
struct StartCorrelations {
  double theta11;
  double theta10;
  double theta_t;
};

StartCorrelations initial_correlations(const PriorSet& priors, bool ci, double empirical_theta11) {
  StartCorrelations s{};
  auto inside = [](const PriorSpec& p, double v) {
    const Interval sup = p.support();
    if (p.is_point_mass()) return p.mean();
    return std::clamp(v, sup.lo + 0.01 * sup.width(), sup.hi - 0.01 * sup.width());
  };
  s.theta_t = clamp_correlation(inside(priors.theta_t, priors.theta_t.mean()));
  s.theta11 = clamp_correlation(inside(priors.theta11, empirical_theta11));
  if (ci) {
    s.theta10 = s.theta_t * s.theta11;
    return s;
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Interval ok = pd_bound_third(s.theta11, s.theta_t).intersect(priors.theta10.support()).shrunk(1e-6);
    if (priors.theta10.is_point_mass()) {
      s.theta10 = priors.theta10.mean();
      if (pd_bound_third(s.theta11, s.theta_t).contains_open(s.theta10)) return s;
    } else if (!ok.empty()) {
      const double m = priors.theta10.mean();
      s.theta10 = ok.contains_open(m) ? m : 0.5 * (ok.lo + ok.hi);
      return s;
    }
    s.theta11 = 0.0;
  }
  throw InputError("priors on theta10/thetaT/theta11 admit no positive-definite starting point");
}

// Maps draws of (coefficients, sds, correlations) to a row of PosteriorDraws.
class DerivedRecorder {
 public:
  DerivedRecorder(const detail::AnalysisData& ad, const FitOptions& opt) : opt_(opt) {
    spec_.design = opt.model.design;
    spec_.basis = ad.basis;
    spec_.baseline_column = opt.model.baseline_column;
    conditional_ = is_conditional(opt.model.design);
    if (conditional_ && ad.raw.rows() > 0) spec_.covariate = EmpiricalCovariate{ad.raw};
    const auto terms = ad.basis.term_names();
    for (int j = 0; j < 3; ++j) {
      for (const auto& t : terms) names_.push_back(coefficient_name(j, t));
    }
    for (const char* n : {"sd_s1", "sd_t0", "sd_t1", "theta11", "theta10", "thetaT", "gamma1"}) names_.push_back(n);
    if (!conditional_) {
      names_.push_back("gamma0");
    } else {
      for (const auto& x : opt.gamma0_at) {
        if (x.size() != ad.basis.n_raw()) throw InputError("gamma0 covariate point has wrong length");
        names_.push_back(gamma0_name(x));
      }
      marginal_ = opt.marginalize && ad.raw.rows() > 0;
      if (marginal_) {
        names_.push_back("gamma0_m");
        names_.push_back("gamma1_m");
      }
    }
  }

  const std::vector<std::string>& names() const { return names_; }

  void record(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, const Eigen::MatrixXd& coefs, const Eigen::Vector3d& sds,
              const CorrelationState& corr) {
    const Index k = coefs.rows();
    Index c = 0;
    for (int j = 0; j < 3; ++j) {
      for (Index t = 0; t < k; ++t) row(c++) = coefs(t, j);
    }
    row(c++) = sds(kS1);
    row(c++) = sds(kT0);
    row(c++) = sds(kT1);
    row(c++) = corr.theta11();
    row(c++) = corr.theta10();
    row(c++) = corr.thetaT();
    spec_.coefs = coefs.transpose();
    spec_.sds = sds;
    spec_.corr = corr;
    const double g1 = gamma1_conditional(sds, corr);
    row(c++) = g1;
    if (!conditional_) {
      row(c++) = (coefs(0, kT1) - coefs(0, kT0)) - g1 * coefs(0, kS1);
      return;
    }
    for (const auto& x : opt_.gamma0_at) row(c++) = gamma_conditional(spec_, x).gamma0;
    if (marginal_) {
      const ValidationMetrics m = marginal_metrics(spec_);
      row(c++) = m.gamma0;
      row(c++) = m.gamma1;
    }
  }

 private:
  const FitOptions& opt_;
  ModelSpec spec_;
  bool conditional_ = false;
  bool marginal_ = false;
  std::vector<std::string> names_;
};

PosteriorDraws empty_draws(const DerivedRecorder& rec, const ChainConfig& cfg) {
  PosteriorDraws d;
  d.names = rec.names();
  d.values.resize(cfg.retained(), static_cast<Index>(d.names.size()));
  d.iterations.reserve(static_cast<std::size_t>(cfg.retained()));
  return d;
}

void check_prior_targets(const PriorSet& p) {
  if (p.theta11.target() != PriorTarget::Theta11 || p.theta10.target() != PriorTarget::Theta10 ||
      p.theta_t.target() != PriorTarget::ThetaT) {
    throw InputError("prior set has priors attached to the wrong parameters");
  }
  if (p.theta11.is_point_mass()) throw InputError("theta11 is identified and cannot take a point-mass prior");
}

}  // namespace

void ChainConfig::validate() const {
  if (n_iter <= 0) throw InputError("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) throw InputError("burn_in must lie in [0, n_iter)");
  if (grid.coarse < 10 || grid.fine < 10) throw InputError("grid sizes must be at least 10");
  if (!(grid.fine_fraction > 0.0 && grid.fine_fraction <= 1.0)) throw InputError("fine_fraction must lie in (0, 1]");
  if (snapshot_every < 0) throw InputError("snapshot_every must be non-negative");
}

std::string to_string(Algorithm a) { return a == Algorithm::Imputation ? "imputation" : "observed"; }

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "imputation") return Algorithm::Imputation;
  if (s == "observed" || s == "observed-data") return Algorithm::ObservedData;
  throw InputError("algorithm must be 'imputation' or 'observed'");
}

bool PosteriorDraws::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

Index PosteriorDraws::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError("draws have no column '" + name + "'");
  return static_cast<Index>(it - names.begin());
}

void PosteriorDraws::write_csv(std::ostream& out) const {
  out << "iter";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    out << (static_cast<std::size_t>(i) < iterations.size() ? iterations[static_cast<std::size_t>(i)] : static_cast<int>(i));
    for (Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
    out << '\n';
  }
}

PosteriorDraws PosteriorDraws::read_csv(std::istream& in) {
  PosteriorDraws d;
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError("empty draw file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  if (header.size() < 2 || header[0] != "iter") throw DataFormatError("draw file header must start with 'iter'");
  d.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    std::vector<double> row;
    std::getline(ss, f, ',');
    d.iterations.push_back(static_cast<int>(parse_double(f)));
    while (std::getline(ss, f, ',')) row.push_back(parse_double(f));
    if (row.size() != d.names.size()) throw DataFormatError("draw row has the wrong number of fields");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataFormatError("draw file has no draws");
  d.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(d.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) d.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return d;
}

std::string gamma0_name(const Eigen::VectorXd& x) {
  std::string s = "gamma0@";
  for (Index i = 0; i < x.size(); ++i) {
    if (i > 0) s += '|';
    s += format_double(x(i));
  }
  return s;
}

std::string coefficient_name(int outcome, const std::string& term) { return std::string(outcome_label(outcome)) + ":" + term; }

std::pair<std::string, std::string> headline_gamma_names(const PosteriorDraws& draws) {
  if (draws.has("gamma0_m")) return {"gamma0_m", "gamma1_m"};
  if (draws.has("gamma0")) return {"gamma0", "gamma1"};
  for (const auto& n : draws.names) {
    if (n.rfind("gamma0@", 0) == 0) return {n, "gamma1"};
  }
  throw InputError("draws carry no gamma0 column");
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

PosteriorSummary summarize(const Eigen::VectorXd& draws) {
  PosteriorSummary s;
  const Index n = draws.size();
  if (n == 0) return s;
  s.mean = draws.mean();
  s.sd = n > 1 ? std::sqrt((draws.array() - s.mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
  std::vector<double> v(draws.data(), draws.data() + n);
  s.q025 = quantile(v, 0.025);
  s.q975 = quantile(v, 0.975);
  s.mc_se = batch_means_se(draws);
  return s;
}

namespace detail {

AnalysisData prepare(const Dataset& data, const ModelTemplate& model) {
  AnalysisData ad;
  const bool conditional = is_conditional(model.design);
  const bool diff = endpoint_mode(model.design) == EndpointMode::DiffFromBaseline;
  const auto p = static_cast<Index>(data.covariate_names.size());
  if (diff && (model.baseline_column < 0 || model.baseline_column >= p)) {
    throw MissingBaseline("difference-from-baseline designs need a baseline covariate column");
  }
  if (conditional) {
    ad.basis = model.basis.raw_names.empty() ? CovariateBasis::linear(data.covariate_names) : model.basis;
    if (ad.basis.n_raw() != p) throw InputError("covariate basis does not match the data's covariate columns");
  } else {
    ad.basis = CovariateBasis::intercept_only();
  }
  const auto n = static_cast<Index>(data.size());
  ad.raw.resize(n, p);
  ad.y = Eigen::MatrixXd::Constant(n, 3, std::numeric_limits<double>::quiet_NaN());
  for (Index i = 0; i < n; ++i) {
    const TrialRecord& r = data.records[static_cast<std::size_t>(i)];
    if (r.x.size() != p) throw DataFormatError("record " + r.id + " has the wrong number of covariates");
    ad.raw.row(i) = r.x.transpose();
    const double base = diff ? r.x(model.baseline_column) : 0.0;
    if (r.z == 0) {
      if (!r.t0) throw DataFormatError("record " + r.id + " (arm 0) has no t0");
      ad.y(i, kT0) = *r.t0 - base;
      ad.arm0.push_back(i);
    } else if (r.z == 1) {
      if (!r.s1 || !r.t1) throw DataFormatError("record " + r.id + " (arm 1) needs s1 and t1");
      ad.y(i, kS1) = *r.s1;
      ad.y(i, kT1) = *r.t1 - base;
      ad.arm1.push_back(i);
    } else {
      throw DataFormatError("record " + r.id + ": arm must be 0 or 1");
    }
  }
  ad.w = conditional ? ad.basis.expand_rows(ad.raw) : Eigen::MatrixXd::Ones(n, 1);
  for (int j = 0; j < 3; ++j) ad.sd_scale(j) = observed_sd(ad.y, j);
  return ad;
}

}  // namespace detail

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

double empirical_correlation(const Eigen::MatrixXd& a) {
  if (a.rows() < 3) return 0.0;
  const Eigen::RowVectorXd m = a.colwise().mean();
  const Eigen::MatrixXd c = a.rowwise() - m;
  const double den = std::sqrt(c.col(0).squaredNorm() * c.col(1).squaredNorm());
  return den > 0.0 ? c.col(0).dot(c.col(1)) / den : 0.0;
}

}  // namespace

PosteriorDraws run_imputation_mcmc(const Dataset& data, const FitOptions& opt) {
  opt.chain.validate();
  check_prior_targets(opt.priors);
  const detail::AnalysisData ad = detail::prepare(data, opt.model);
  const bool ci = opt.model.ci;
  const Index n = ad.y.rows();
  const Index k = ad.w.cols();
  Rng rng(opt.chain.seed);
  DerivedRecorder recorder(ad, opt);
  PosteriorDraws out = empty_draws(recorder, opt.chain);

  // Starting values from the observed arms.
  Eigen::MatrixXd coefs(k, 3);
  {
    const Eigen::MatrixXd w0 = gather_rows(ad.w, ad.arm0);
    const Eigen::MatrixXd w1 = gather_rows(ad.w, ad.arm1);
    const Eigen::MatrixXd y0 = gather_rows(ad.y, ad.arm0).col(kT0);
    Eigen::MatrixXd y1(static_cast<Index>(ad.arm1.size()), 2);
    const Eigen::MatrixXd y1_all = gather_rows(ad.y, ad.arm1);
    y1.col(0) = y1_all.col(kS1);
    y1.col(1) = y1_all.col(kT1);
    coefs.col(kT0) = initial_coefficients(w0, y0);
    const Eigen::MatrixXd b1 = initial_coefficients(w1, y1);
    coefs.col(kS1) = b1.col(0);
    coefs.col(kT1) = b1.col(1);
  }
  SmallVec sds = ad.sd_scale;
  SmallVec scale = ad.sd_scale;
  const Eigen::MatrixXd y1_obs = [&] {
    Eigen::MatrixXd y1(static_cast<Index>(ad.arm1.size()), 2);
    for (std::size_t i = 0; i < ad.arm1.size(); ++i) {
      y1(static_cast<Index>(i), 0) = ad.y(ad.arm1[i], kS1);
      y1(static_cast<Index>(i), 1) = ad.y(ad.arm1[i], kT1);
    }
    return y1;
  }();
  const StartCorrelations start = initial_correlations(opt.priors, ci, empirical_correlation(y1_obs));
  double t11 = start.theta11;
  double t10 = start.theta10;
  double tt = start.theta_t;

  Eigen::MatrixXd y = ad.y;
  const Eigen::MatrixXd wtw = ad.w.transpose() * ad.w;
  const std::array<Index, 1> obs0{kT0};
  const std::array<Index, 2> obs1{kS1, kT1};
  const double nn = static_cast<double>(n);

  for (int it = 0; it < opt.chain.n_iter; ++it) {
    // (a) impute the unobserved potential outcomes
    const Eigen::Matrix3d sigma = Eigen::Vector3d(sds).asDiagonal() * corr_matrix(t11, t10, tt) *
                                  Eigen::Vector3d(sds).asDiagonal();
    const GaussianJoint<double> zero_mean(Eigen::Vector3d::Zero(), sigma);
    {
      const GaussianConditioner<double> c0(zero_mean, obs0);
      const Eigen::MatrixXd l0 = cholesky(c0.covariance());
      for (Index i : ad.arm0) {
        const Eigen::Vector3d mu = coefs.transpose() * ad.w.row(i).transpose();
        const Eigen::Vector2d m = Eigen::Vector2d(mu(kS1), mu(kT1)) + c0.gain() * (y(i, kT0) - mu(kT0));
        const Eigen::Vector2d z(standard_normal(rng), standard_normal(rng));
        const Eigen::Vector2d v = m + l0 * z;
        y(i, kS1) = v(0);
        y(i, kT1) = v(1);
      }
      const GaussianConditioner<double> c1(zero_mean, obs1);
      const double l1 = std::sqrt(c1.covariance()(0, 0));
      for (Index i : ad.arm1) {
        const Eigen::Vector3d mu = coefs.transpose() * ad.w.row(i).transpose();
        const Eigen::Vector2d resid(y(i, kS1) - mu(kS1), y(i, kT1) - mu(kT1));
        y(i, kT0) = mu(kT0) + (c1.gain() * resid)(0) + l1 * standard_normal(rng);
      }
    }
    if (!y.allFinite()) throw ChainDiverged("imputed outcomes became non-finite at iteration " + std::to_string(it));

    // (b) mean coefficients
    coefs = draw_coefficients(wtw, ad.w.transpose() * y, SmallMat(sigma), opt.priors.coefficient, rng);

    // (c) standard deviations
    const Eigen::MatrixXd resid = y - ad.w * coefs;
    const SmallMat scatter = resid.transpose() * resid;
    if (!scatter.allFinite()) throw ChainDiverged("residual scatter became non-finite");
    draw_sds(sds, SmallMat(corr_matrix(t11, t10, tt)), scatter, nn, scale, opt.chain.grid, rng);

    // (d) correlations, one at a time within their positive-definite range
    const SmallMat scaled = scaled_scatter(scatter, sds);
    if (ci) {
      {
        auto target = [&](double v) {
          return correlation_loglik(SmallMat(corr_matrix(v, tt * v, tt)), scaled, nn) + opt.priors.theta11.log_density(v);
        };
        t11 = griddy_gibbs_draw_zoomed(target, correlation_support(kCorrelationRange, opt.priors.theta11), opt.chain.grid, rng);
      }
      if (!opt.priors.theta_t.is_point_mass()) {
        auto target = [&](double v) {
          return correlation_loglik(SmallMat(corr_matrix(t11, v * t11, v)), scaled, nn) + opt.priors.theta_t.log_density(v);
        };
        tt = griddy_gibbs_draw_zoomed(target, correlation_support(kCorrelationRange, opt.priors.theta_t), opt.chain.grid, rng);
      }
      t10 = apply_ci_constraint(tt, t11);
    } else {
      {
        auto target = [&](double v) {
          return correlation_loglik(SmallMat(corr_matrix(v, t10, tt)), scaled, nn) + opt.priors.theta11.log_density(v);
        };
        t11 = griddy_gibbs_draw_zoomed(target, correlation_support(pd_bound_third(t10, tt), opt.priors.theta11), opt.chain.grid,
                                rng);
      }
      if (!opt.priors.theta10.is_point_mass()) {
        auto target = [&](double v) {
          return correlation_loglik(SmallMat(corr_matrix(t11, v, tt)), scaled, nn) + opt.priors.theta10.log_density(v);
        };
        t10 = griddy_gibbs_draw_zoomed(target, correlation_support(pd_bound_third(t11, tt), opt.priors.theta10), opt.chain.grid,
                                rng);
      }
      if (!opt.priors.theta_t.is_point_mass()) {
        auto target = [&](double v) {
          return correlation_loglik(SmallMat(corr_matrix(t11, t10, v)), scaled, nn) + opt.priors.theta_t.log_density(v);
        };
        tt = griddy_gibbs_draw_zoomed(target, correlation_support(pd_bound_third(t11, t10), opt.priors.theta_t), opt.chain.grid,
                               rng);
      }
    }

    // (e) record
    if (it >= opt.chain.burn_in) {
      const Index row = it - opt.chain.burn_in;
      const CorrelationState corr =
          ci ? CorrelationState::conditionally_independent(t11, tt) : CorrelationState::unconstrained(t11, t10, tt);
      recorder.record(out.values.row(row), coefs, Eigen::Vector3d(sds), corr);
      out.iterations.push_back(it + 1);
      if (opt.chain.snapshot_every > 0 && row % opt.chain.snapshot_every == 0) out.imputed.push_back(y);
    }
  }
  return out;
}

PosteriorDraws run_observed_data_mcmc(const Dataset& data, const FitOptions& opt) {
  opt.chain.validate();
  check_prior_targets(opt.priors);
  const detail::AnalysisData ad = detail::prepare(data, opt.model);
  const bool ci = opt.model.ci;
  Rng rng(opt.chain.seed);
  DerivedRecorder recorder(ad, opt);
  PosteriorDraws out = empty_draws(recorder, opt.chain);

  // Control arm: T(0) | X. Treated arm: (S(1), T(1)) | X.
  const Eigen::MatrixXd w0 = gather_rows(ad.w, ad.arm0);
  const Eigen::MatrixXd w1 = gather_rows(ad.w, ad.arm1);
  const Eigen::MatrixXd y0 = gather_rows(ad.y, ad.arm0).col(kT0);
  Eigen::MatrixXd y1(static_cast<Index>(ad.arm1.size()), 2);
  for (std::size_t i = 0; i < ad.arm1.size(); ++i) {
    y1(static_cast<Index>(i), 0) = ad.y(ad.arm1[i], kS1);
    y1(static_cast<Index>(i), 1) = ad.y(ad.arm1[i], kT1);
  }
  const Eigen::MatrixXd w0tw0 = w0.transpose() * w0;
  const Eigen::MatrixXd w0ty0 = w0.transpose() * y0;
  const Eigen::MatrixXd w1tw1 = w1.transpose() * w1;
  const Eigen::MatrixXd w1ty1 = w1.transpose() * y1;
  const double n0 = static_cast<double>(y0.rows());
  const double n1 = static_cast<double>(y1.rows());

  Eigen::MatrixXd b0 = initial_coefficients(w0, y0);
  Eigen::MatrixXd b1 = initial_coefficients(w1, y1);
  SmallVec sd0(1);
  sd0 << ad.sd_scale(kT0);
  SmallVec sd1(2);
  sd1 << ad.sd_scale(kS1), ad.sd_scale(kT1);
  SmallVec scale0 = sd0;
  SmallVec scale1 = sd1;
  const StartCorrelations start = initial_correlations(opt.priors, ci, empirical_correlation(y1));
  double t11 = start.theta11;
  const SmallMat one = SmallMat::Identity(1, 1);

  for (int it = 0; it < opt.chain.n_iter; ++it) {
    // control arm
    {
      SmallMat sigma0(1, 1);
      sigma0(0, 0) = sd0(0) * sd0(0);
      b0 = draw_coefficients(w0tw0, w0ty0, sigma0, opt.priors.coefficient, rng);
      const Eigen::MatrixXd e0 = y0 - w0 * b0;
      const SmallMat s0 = e0.transpose() * e0;
      draw_sds(sd0, one, s0, n0, scale0, opt.chain.grid, rng);
    }
    // treated arm
    {
      SmallMat r1(2, 2);
      r1 << 1.0, t11, t11, 1.0;
      const SmallMat sigma1 = sd1.asDiagonal() * r1 * sd1.asDiagonal();
      b1 = draw_coefficients(w1tw1, w1ty1, sigma1, opt.priors.coefficient, rng);
      const Eigen::MatrixXd e1 = y1 - w1 * b1;
      const SmallMat s1 = e1.transpose() * e1;
      if (!s1.allFinite()) throw ChainDiverged("treated-arm scatter became non-finite");
      draw_sds(sd1, r1, s1, n1, scale1, opt.chain.grid, rng);
      const SmallMat scaled = scaled_scatter(s1, sd1);
      auto target = [&](double v) {
        SmallMat r(2, 2);
        r << 1.0, v, v, 1.0;
        return correlation_loglik(r, scaled, n1) + opt.priors.theta11.log_density(v);
      };
      t11 = griddy_gibbs_draw_zoomed(target, correlation_support(kCorrelationRange, opt.priors.theta11), opt.chain.grid, rng);
    }
    // Nonidentified correlations straight from their priors. Without CI the
    // pair (thetaT, theta10) is redrawn until the matrix is positive definite,
    // which samples the joint prior truncated to that region.
    double tt = 0.0;
    double t10 = 0.0;
    for (int tries = 0;; ++tries) {
      if (tries >= kMaxRejections) {
        throw RejectionStarvation("more than " + std::to_string(kMaxRejections) +
                                  " consecutive prior draws outside the positive-definite range");
      }
      tt = opt.priors.theta_t.sample(rng);
      if (!(std::abs(tt) < 1.0)) continue;
      if (ci) {
        t10 = apply_ci_constraint(tt, t11);
        break;
      }
      t10 = opt.priors.theta10.sample(rng);
      if (pd_bound_third(t11, tt).shrunk().contains_open(t10)) break;
    }

    if (it >= opt.chain.burn_in) {
      const Index row = it - opt.chain.burn_in;
      Eigen::MatrixXd coefs(b0.rows(), 3);
      coefs.col(kS1) = b1.col(0);
      coefs.col(kT0) = b0.col(0);
      coefs.col(kT1) = b1.col(1);
      const Eigen::Vector3d sds(sd1(0), sd0(0), sd1(1));
      const CorrelationState corr =
          ci ? CorrelationState::conditionally_independent(t11, tt) : CorrelationState::unconstrained(t11, t10, tt);
      recorder.record(out.values.row(row), coefs, sds, corr);
      out.iterations.push_back(it + 1);
    }
  }
  return out;
}

PosteriorDraws run_mcmc(Algorithm algorithm, const Dataset& data, const FitOptions& options) {
  return algorithm == Algorithm::Imputation ? run_imputation_mcmc(data, options) : run_observed_data_mcmc(data, options);
}

std::vector<SensitivityRow> sensitivity_scan(const Dataset& data, const FitOptions& base,
                                             const std::vector<PriorSpec>& theta_t_priors) {
  std::vector<SensitivityRow> rows;
  for (const auto& prior : theta_t_priors) {
    if (prior.target() != PriorTarget::ThetaT) throw InputError("sensitivity settings must be thetaT priors");
    const Interval sup = prior.support();
    if (!(sup.lo > -1.0 && sup.hi < 1.0) && prior.is_point_mass()) throw InputError("fixed thetaT must lie in (-1, 1)");
    FitOptions opt = base;
    opt.priors.theta_t = prior;
    const PosteriorDraws draws = run_observed_data_mcmc(data, opt);
    const auto [g0, g1] = headline_gamma_names(draws);
    SensitivityRow row;
    row.label = prior.describe();
    row.theta_t = prior.mean();
    row.gamma0 = summarize(draws.series(g0));
    row.gamma1 = summarize(draws.series(g1));
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SensitivityRow& a, const SensitivityRow& b) { return a.theta_t < b.theta_t; });
  return rows;
}

}  // namespace surrocep
