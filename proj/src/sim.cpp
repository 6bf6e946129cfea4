#include "surrocep/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace surrocep {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Optional "(value)" suffix of a family name such as "t(5)".
std::optional<double> family_argument(const std::string& text, const std::string& family) {
  if (text == family) return std::nullopt;
  if (text.size() > family.size() + 2 && text.compare(0, family.size() + 1, family + "(") == 0 && text.back() == ')') {
    return parse_double(text.substr(family.size() + 1, text.size() - family.size() - 2));
  }
  throw InputError("noise must be gaussian, t(df) or gamma(shape), got '" + text + "'");
}

double unit_noise(const NoiseSpec& noise, Rng& rng) {
  switch (noise.family) {
    case NoiseFamily::Gaussian:
      return standard_normal(rng);
    case NoiseFamily::StudentT:
      return std::student_t_distribution<double>(noise.df)(rng) * std::sqrt((noise.df - 2.0) / noise.df);
    case NoiseFamily::Gamma: {
      const double g = std::gamma_distribution<double>(noise.shape, 1.0)(rng);
      return (g - noise.shape) / std::sqrt(noise.shape);
    }
  }
  return 0.0;
}

double draw_covariate(const CovariateDist& c, Rng& rng) {
  switch (c.kind) {
    case CovariateDist::Kind::Normal:
      return c.a + c.b * standard_normal(rng);
    case CovariateDist::Kind::Bernoulli:
      return uniform01(rng) < c.a ? 1.0 : 0.0;
    case CovariateDist::Kind::Uniform:
      return c.a + (c.b - c.a) * uniform01(rng);
  }
  return 0.0;
}

struct PresetRow {
  const char* name;
  ReferenceColumn column;
  PublishedGammas published;
};

ReferenceColumn reference(std::optional<double> sigma_x, std::optional<double> delta4, double w4, double w6,
                          double theta10, double theta11, double theta_t, bool binary) {
  ReferenceColumn c;
  c.sigma_x = sigma_x;
  c.delta4 = delta4;
  c.omega = {2.0, 0.0, 3.0, w4, 4.1, w6};
  c.eps = {1.0, 1.0, 1.0};
  c.theta10 = theta10;
  c.theta11 = theta11;
  c.theta_t = theta_t;
  c.binary_x = binary;
  return c;
}

const std::vector<PresetRow>& preset_rows() {
  static const std::vector<PresetRow> rows = [] {
    std::vector<PresetRow> r;
    r.push_back({"A", reference(0.5, 1.0, 1.0, 1.0, 0.15, 0.7, 0.21, false), {0.0, 0.55, -0.06, 0.58, {}}});
    r.push_back({"B", reference(0.5, 1.0, 0.0, 0.0, 0.15, 0.7, 0.21, false), {0.0, 0.55, 0.0, 0.55, {}}});
    r.push_back({"C", reference(0.5, 1.0, 1.0, 1.0, 0.15, 0.7, 0.21, false), {-1.00, 0.55, -1.02, 0.56, {}}});
    r.push_back({"D", reference(0.5, 1.0, 3.0, 1.0, 0.08, 0.3, 0.26, false), {-1.35, 0.22, -1.33, 0.22, {}}});
    PublishedGammas e{1.31, 0.58, std::nullopt, std::nullopt, {{"gamma0@0", 0.0}, {"gamma0@1", 2.75}, {"gamma1", 0.55}}};
    r.push_back({"E", reference(std::nullopt, std::nullopt, -0.75, 2.0, 0.15, 0.7, 0.21, true), e});
    return r;
  }();
  return rows;
}

SimSetting from_reference(const std::string& name, const ReferenceColumn& c, std::optional<double> theta10) {
  SimSetting s;
  s.name = name;
  CovariateDist x;
  x.name = "x_base";
  if (c.binary_x) {
    x.kind = CovariateDist::Kind::Bernoulli;
    x.a = 0.5;
    s.report_at = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  } else {
    x.kind = CovariateDist::Kind::Normal;
    x.a = *c.delta4;
    x.b = *c.sigma_x;
    s.report_at = {Eigen::VectorXd::Constant(1, *c.delta4)};
  }
  s.covariates = {x};
  s.basis = CovariateBasis::linear({x.name});
  s.coefs.resize(3, 2);
  s.coefs << c.omega[0], c.omega[1], c.omega[2], c.omega[3], c.omega[4], c.omega[5];
  s.sds << c.eps[0], c.eps[1], c.eps[2];
  s.corr = theta10 ? CorrelationState::unconstrained(c.theta11, *theta10, c.theta_t)
                   : CorrelationState::conditionally_independent(c.theta11, c.theta_t);
  s.baseline_column = 0;
  return s;
}

double required(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end() || trim(it->second).empty()) throw IncompleteConfig("missing key '" + key + "'");
  return parse_double(it->second);
}

std::optional<double> optional_value(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end() || trim(it->second).empty()) return std::nullopt;
  return parse_double(it->second);
}

NoiseSpec noise_from(const KeyValues& kv) {
  const auto it = kv.find("noise");
  return it == kv.end() ? NoiseSpec{} : parse_noise(it->second);
}

}  // namespace

NoiseSpec parse_noise(const std::string& raw) {
  const std::string text = lower(trim(raw));
  NoiseSpec n;
  if (text == "gaussian" || text == "normal") return n;
  if (text == "t" || text.rfind("t(", 0) == 0) {
    n.family = NoiseFamily::StudentT;
    if (auto v = family_argument(text, "t")) n.df = *v;
    if (!(n.df > 2.0)) throw InputError("t noise needs df > 2 for a finite variance");
    return n;
  }
  if (text.rfind("gamma", 0) == 0) {
    n.family = NoiseFamily::Gamma;
    if (auto v = family_argument(text, "gamma")) n.shape = *v;
    if (!(n.shape > 0.0)) throw InputError("gamma noise needs a positive shape");
    return n;
  }
  throw InputError("noise must be gaussian, t(df) or gamma(shape), got '" + raw + "'");
}

std::string to_string(const NoiseSpec& noise) {
  switch (noise.family) {
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::StudentT: return "t(" + format_double(noise.df) + ")";
    case NoiseFamily::Gamma: return "gamma(" + format_double(noise.shape) + ")";
  }
  return "";
}

std::vector<std::string> SimSetting::covariate_names() const {
  std::vector<std::string> names;
  for (const auto& c : covariates) names.push_back(c.name);
  return names;
}

ModelSpec SimSetting::truth_spec() const {
  ModelSpec spec;
  spec.design = Design::OriginalConditional;
  spec.basis = basis;
  spec.coefs = coefs;
  spec.sds = sds;
  spec.corr = corr;
  spec.baseline_column = baseline_column;
  if (covariates.size() == 1 && basis.quadratic.empty()) {
    const auto& c = covariates.front();
    if (c.kind == CovariateDist::Kind::Normal) spec.covariate = NormalCovariate{c.a, c.b};
    if (c.kind == CovariateDist::Kind::Bernoulli) spec.covariate = BernoulliCovariate{c.a};
  }
  return spec;
}

void SimSetting::validate() const {
  if (covariates.empty()) throw InputError("setting needs at least one covariate");
  if (basis.n_raw() != static_cast<Index>(covariates.size())) throw InputError("basis does not match covariates");
  if (coefs.cols() != basis.dim()) throw InputError("coefficient matrix does not match the basis");
  if (!(sds.array() > 0.0).all()) throw DegenerateVariance("outcome standard deviations must be positive");
  if (baseline_column < 0 || baseline_column >= static_cast<int>(covariates.size())) {
    throw MissingBaseline("baseline column out of range");
  }
  for (const auto& c : covariates) {
    if (c.name.rfind("x_", 0) != 0) throw InputError("covariate names must start with x_");
    if (c.kind == CovariateDist::Kind::Normal && !(c.b > 0.0)) throw DegenerateVariance("covariate sd must be positive");
    if (c.kind == CovariateDist::Kind::Bernoulli && !(c.a > 0.0 && c.a < 1.0)) {
      throw InputError("Bernoulli covariate probability must lie in (0, 1)");
    }
    if (c.kind == CovariateDist::Kind::Uniform && !(c.b > c.a)) throw InputError("uniform covariate needs lo < hi");
  }
  if (!corr.positive_definite()) throw NotPositiveDefinite("setting correlation matrix is not positive definite");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"A", "B", "C", "D", "E"};
  return names;
}

SimSetting preset_setting(const std::string& name) {
  for (const auto& row : preset_rows()) {
    if (name == row.name) {
      SimSetting s = from_reference(name, row.column, row.column.theta10);
      s.reference = row.column;
      s.published = row.published;
      return s;
    }
  }
  throw InputError("unknown setting '" + name + "'; valid names: A, B, C, D, E, DMD or a parameter file");
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataFormatError("line " + std::to_string(lineno) + ": expected key = value");
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    kv[trim(line.substr(0, eq))] = value;
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_key_values(in);
}

// Artifact-chosen values: treatment benefit shrinks with age, so the subgroup
// CEP passes near the origin at age 4 and drops away from it from age 6 on.
KeyValues default_dmd_config() {
  return {
      {"age_lo", "4"},          {"age_hi", "8"},          {"nsaa_mean", "24"},     {"nsaa_sd", "4"},
      {"s1_intercept", "8"},    {"s1_age", "0"},          {"s1_age2", "0"},        {"s1_nsaa", "0"},
      {"t0_intercept", "2"},    {"t0_age", "1.5"},        {"t0_age2", "-0.2"},     {"t0_nsaa", "0.9"},
      {"t1_intercept", "11.8"}, {"t1_age", "-0.4"},       {"t1_age2", "-0.15"},    {"t1_nsaa", "0.9"},
      {"sd_s1", "3"},           {"sd_t0", "3"},           {"sd_t1", "3"},          {"theta11", "0.5"},
      {"theta_t", "0.25"},
  };
}

SimSetting dmd_scenario(const KeyValues& config) {
  SimSetting s;
  s.name = "DMD";
  s.covariates = {{"x_age", CovariateDist::Kind::Uniform, required(config, "age_lo"), required(config, "age_hi")},
                  {"x_nsaa", CovariateDist::Kind::Normal, required(config, "nsaa_mean"), required(config, "nsaa_sd")}};
  s.basis = CovariateBasis{{"x_age", "x_nsaa"}, {0}};
  s.coefs.resize(3, 4);  // terms: 1, age, nsaa, age^2
  const char* prefix[3] = {"s1", "t0", "t1"};
  for (int j = 0; j < 3; ++j) {
    const std::string p = prefix[j];
    s.coefs(j, 0) = required(config, p + "_intercept");
    s.coefs(j, 1) = required(config, p + "_age");
    s.coefs(j, 2) = required(config, p + "_nsaa");
    s.coefs(j, 3) = required(config, p + "_age2");
  }
  s.sds << required(config, "sd_s1"), required(config, "sd_t0"), required(config, "sd_t1");
  const double t11 = required(config, "theta11");
  const double tt = required(config, "theta_t");
  const auto t10 = optional_value(config, "theta10");
  s.corr = t10 ? CorrelationState::unconstrained(t11, *t10, tt) : CorrelationState::conditionally_independent(t11, tt);
  s.baseline_column = 1;
  s.noise = noise_from(config);
  const double nsaa = s.covariates[1].a;
  for (double age : {4.0, 5.0, 6.0}) {
    Eigen::VectorXd x(2);
    x << age, nsaa;
    s.report_at.push_back(x);
  }
  s.validate();
  return s;
}

SimSetting custom_setting(const KeyValues& config) {
  ReferenceColumn c;
  const auto cov = config.find("covariate");
  c.binary_x = cov != config.end() && lower(trim(cov->second)) == "bernoulli";
  if (!c.binary_x) {
    c.sigma_x = required(config, "sigma_x");
    c.delta4 = required(config, "delta4");
  }
  for (int i = 0; i < 6; ++i) c.omega[static_cast<std::size_t>(i)] = required(config, "omega" + std::to_string(i + 1));
  c.eps = {required(config, "eps_s1"), required(config, "eps_t0"), required(config, "eps_t1")};
  c.theta11 = required(config, "theta11");
  c.theta_t = required(config, "theta_t");
  const auto t10 = optional_value(config, "theta10");
  c.theta10 = t10 ? *t10 : c.theta_t * c.theta11;
  const auto name = config.find("name");
  SimSetting s = from_reference(name == config.end() ? "custom" : name->second, c, t10);
  if (c.binary_x) {
    if (auto p = optional_value(config, "p")) s.covariates[0].a = *p;
  }
  s.reference = c;
  s.noise = noise_from(config);
  s.validate();
  return s;
}

SimSetting resolve_setting(const std::string& name_or_path) {
  for (const auto& n : preset_names()) {
    if (name_or_path == n) return preset_setting(n);
  }
  if (lower(name_or_path) == "dmd") return dmd_scenario(default_dmd_config());
  std::error_code ec;
  if (std::filesystem::is_regular_file(name_or_path, ec)) {
    const KeyValues kv = read_key_values_file(name_or_path);
    const auto scenario = kv.find("scenario");
    if (scenario != kv.end() && lower(scenario->second) == "dmd") return dmd_scenario(kv);
    return custom_setting(kv);
  }
  return preset_setting(name_or_path);  // throws with the list of valid names
}

SimulatedTrial generate(const SimSetting& setting, Index n, std::uint64_t seed) {
  setting.validate();
  if (n < 2 || n % 2 != 0) throw InputError("sample size must be a positive even number");
  Rng rng(seed);
  const auto p = static_cast<Index>(setting.covariates.size());
  const Eigen::Matrix3d cov = setting.sds.asDiagonal() * setting.corr.matrix() * setting.sds.asDiagonal();
  const Eigen::Matrix3d chol = cholesky(cov);
  CounterfactualTable t;
  t.covariate_names = setting.covariate_names();
  t.x.resize(n, p);
  t.s1.resize(n);
  t.t0.resize(n);
  t.t1.resize(n);
  t.z.resize(n);
  Eigen::VectorXd x(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(j) = draw_covariate(setting.covariates[static_cast<std::size_t>(j)], rng);
    Eigen::Vector3d u;
    for (int k = 0; k < 3; ++k) u(k) = unit_noise(setting.noise, rng);
    const Eigen::Vector3d y = setting.coefs * setting.basis.expand(x) + chol * u;
    t.x.row(i) = x.transpose();
    t.s1(i) = y(kS1);
    t.t0(i) = y(kT0);
    t.t1(i) = y(kT1);
    t.z(i) = i < n / 2 ? 0 : 1;
  }
  SimulatedTrial out{t, t.masked()};
  return out;
}

double OracleFit::gamma1_conditional() const {
  if (!conditional) throw InputError("oracle fit has no conditional coefficients");
  return (*conditional)(conditional->size() - 1);
}

double OracleFit::gamma0_at(const Eigen::VectorXd& x) const {
  if (!conditional) throw InputError("oracle fit has no conditional coefficients");
  const Eigen::VectorXd w = basis.expand(x);
  return w.dot(conditional->head(w.size()));
}

namespace {

struct OlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
};

OlsResult ols(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols() || a.rows() <= a.cols()) throw RankDeficient("oracle regression is rank deficient");
  OlsResult r;
  r.beta = qr.solve(y);
  const double dof = static_cast<double>(a.rows() - a.cols());
  const double s2 = (y - a * r.beta).squaredNorm() / dof;
  const Eigen::MatrixXd ata_inv = (a.transpose() * a).inverse();
  r.se = (s2 * ata_inv.diagonal()).cwiseSqrt();
  return r;
}

}  // namespace

OracleFit oracle_fit(const CounterfactualTable& table, Design design, const CovariateBasis& basis,
                     int baseline_column) {
  const Index n = table.size();
  const CounterfactualTable t =
      endpoint_mode(design) == EndpointMode::DiffFromBaseline
          ? endpoint_transform(table, EndpointMode::DiffFromBaseline, baseline_column)
          : table;
  const Eigen::VectorXd diff = t.t1 - t.t0;
  OracleFit fit;
  Eigen::MatrixXd a(n, 2);
  a.col(0).setOnes();
  a.col(1) = t.s1;
  const OlsResult m = ols(a, diff);
  fit.gamma0 = m.beta(0);
  fit.gamma1 = m.beta(1);
  fit.gamma0_se = m.se(0);
  fit.gamma1_se = m.se(1);
  if (is_conditional(design)) {
    fit.basis = basis.raw_names.empty() ? CovariateBasis::linear(t.covariate_names) : basis;
    const Eigen::MatrixXd w = fit.basis.expand_rows(t.x);
    Eigen::MatrixXd b(n, w.cols() + 1);
    b << w, t.s1;
    const OlsResult c = ols(b, diff);
    fit.conditional = c.beta;
    fit.conditional_se = c.se;
  }
  return fit;
}

const EstimandSummary& ReplicationSummary::at(const std::string& estimand) const {
  for (const auto& e : estimands) {
    if (e.estimand == estimand) return e;
  }
  throw InputError("summary has no estimand '" + estimand + "'");
}

void ReplicationSummary::write_long(std::ostream& out) const {
  const std::string prefix = setting + "," + std::to_string(to_int(design)) + (ci ? "-ci" : "-noci") + ",";
  out << "setting,design,estimand,metric,value\n";
  out << prefix << "run,reps," << reps << '\n';
  out << prefix << "run,failures," << failures << '\n';
  auto row = [&](const std::string& est, const char* metric, std::optional<double> v) {
    if (v) out << prefix << est << ',' << metric << ',' << format_double(*v) << '\n';
  };
  for (const auto& e : estimands) {
    row(e.estimand, "truth", e.truth);
    row(e.estimand, "published", e.published);
    row(e.estimand, "mean", e.mean);
    row(e.estimand, "bias", e.bias);
    row(e.estimand, "se", e.se);
    row(e.estimand, "sd", e.sd);
    row(e.estimand, "coverage", e.coverage);
    row(e.estimand, "covers_zero", e.covers_zero);
    row(e.estimand, "oracle_sd", e.oracle_sd);
    row(e.estimand, "scaled_bias", e.scaled_bias);
    row(e.estimand, "scaled_se", e.scaled_se);
    row(e.estimand, "scaled_sd", e.scaled_sd);
  }
}

int default_thread_count() {
  if (const char* env = std::getenv("SURROCEP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<std::string> estimand_names(const FitOptions& fit) {
  if (!is_conditional(fit.model.design)) return {"gamma0", "gamma1"};
  std::vector<std::string> names;
  for (const auto& x : fit.gamma0_at) names.push_back(gamma0_name(x));
  names.push_back("gamma1");
  if (fit.marginalize) {
    names.push_back("gamma0_m");
    names.push_back("gamma1_m");
  }
  return names;
}

bool surrogate_valid(const PosteriorSummary& gamma0, const PosteriorSummary& gamma1) {
  return gamma0.covers(0.0) && !gamma1.covers(0.0);
}

namespace {

double oracle_value(const OracleFit& o, const std::string& estimand, const std::vector<Eigen::VectorXd>& at) {
  if (estimand == "gamma0" || estimand == "gamma0_m") return o.gamma0;
  if (estimand == "gamma1_m") return o.gamma1;
  if (estimand == "gamma1") return o.conditional ? o.gamma1_conditional() : o.gamma1;
  for (const auto& x : at) {
    if (gamma0_name(x) == estimand) return o.gamma0_at(x);
  }
  throw InputError("no oracle value for '" + estimand + "'");
}

std::optional<double> published_value(const SimSetting& s, Design design, const std::string& estimand) {
  const auto it = s.published.conditional.find(estimand);
  if (is_conditional(design) && it != s.published.conditional.end()) return it->second;
  const bool diff = endpoint_mode(design) == EndpointMode::DiffFromBaseline;
  if (estimand == "gamma0" || estimand == "gamma0_m") return diff ? s.published.gamma0_d : s.published.gamma0_o;
  if (estimand == "gamma1_m" || (estimand == "gamma1" && !is_conditional(design))) {
    return diff ? s.published.gamma1_d : s.published.gamma1_o;
  }
  return std::nullopt;
}

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

ReplicationSummary run_replications(const ReplicationConfig& cfg, std::vector<ReplicationDetail>* details) {
  if (cfg.reps < 1) throw InputError("reps must be at least 1");
  cfg.setting.validate();
  cfg.fit.chain.validate();
  FitOptions fit = cfg.fit;
  const bool conditional = is_conditional(fit.model.design);
  if (conditional && fit.model.basis.raw_names.empty()) fit.model.basis = cfg.setting.basis;
  fit.model.baseline_column = cfg.setting.baseline_column;
  if (conditional && fit.gamma0_at.empty()) fit.gamma0_at = cfg.setting.report_at;
  const std::vector<std::string> names = estimand_names(fit);

  // Population truth from a large complete-data oracle fit.
  const SimulatedTrial big = generate(cfg.setting, cfg.truth_n, derive_seed(cfg.seed, 0xFFFFFFFFull));
  const OracleFit truth = oracle_fit(big.full, fit.model.design, fit.model.basis, fit.model.baseline_column);

  std::vector<ReplicationDetail> results(static_cast<std::size_t>(cfg.reps));
  std::vector<std::map<std::string, double>> oracle(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < cfg.reps; r = next++) {
      auto& res = results[static_cast<std::size_t>(r)];
      try {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
        const SimulatedTrial trial = generate(cfg.setting, cfg.n, derive_seed(rep_seed, 0));
        FitOptions f = fit;
        f.chain.seed = derive_seed(rep_seed, 1);
        const PosteriorDraws draws = run_mcmc(cfg.algorithm, trial.masked, f);
        for (const auto& name : names) res.posterior[name] = summarize(draws.series(name));
        if (cfg.scale_by_oracle) {
          const OracleFit o = oracle_fit(trial.full, fit.model.design, fit.model.basis, fit.model.baseline_column);
          for (const auto& name : names) oracle[static_cast<std::size_t>(r)][name] = oracle_value(o, name, fit.gamma0_at);
        }
        res.ok = true;
      } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min(cfg.threads > 0 ? cfg.threads : default_thread_count(), cfg.reps));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ReplicationSummary s;
  s.setting = cfg.setting.name;
  s.design = fit.model.design;
  s.ci = fit.model.ci;
  s.reps = cfg.reps;
  for (const auto& r : results) {
    if (!r.ok) {
      ++s.failures;
      if (std::find(s.failure_messages.begin(), s.failure_messages.end(), r.error) == s.failure_messages.end()) {
        s.failure_messages.push_back(r.error);
      }
    }
  }
  const int ok = s.reps - s.failures;
  for (const auto& name : names) {
    EstimandSummary e;
    e.estimand = name;
    e.truth = oracle_value(truth, name, fit.gamma0_at);
    e.published = published_value(cfg.setting, fit.model.design, name);
    if (ok > 0) {
      std::vector<double> means;
      std::vector<double> oracle_values;
      double se = 0.0;
      double cover = 0.0;
      double zero = 0.0;
      for (std::size_t r = 0; r < results.size(); ++r) {
        if (!results[r].ok) continue;
        const PosteriorSummary& ps = results[r].posterior.at(name);
        means.push_back(ps.mean);
        se += ps.sd;
        cover += ps.covers(e.truth) ? 1.0 : 0.0;
        zero += ps.covers(0.0) ? 1.0 : 0.0;
        if (cfg.scale_by_oracle) oracle_values.push_back(oracle[r].at(name));
      }
      double sum = 0.0;
      for (double m : means) sum += m;
      e.mean = sum / ok;
      e.bias = e.mean - e.truth;
      e.se = se / ok;
      e.coverage = cover / ok;
      e.covers_zero = zero / ok;
      if (ok > 1) e.sd = sample_sd(means);
      if (cfg.scale_by_oracle && ok > 1) {
        e.oracle_sd = sample_sd(oracle_values);
        if (*e.oracle_sd > 0.0) {
          e.scaled_bias = e.bias / *e.oracle_sd;
          e.scaled_se = e.se / *e.oracle_sd;
          e.scaled_sd = *e.sd / *e.oracle_sd;
        }
      }
    }
    s.estimands.push_back(std::move(e));
  }
  if (details) *details = std::move(results);
  return s;
}

}  // namespace surrocep
