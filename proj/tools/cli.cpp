#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include "surrocep/data.hpp"
#include "surrocep/diagnostics.hpp"
#include "surrocep/errors.hpp"
#include "surrocep/samplers.hpp"
#include "surrocep/sim.hpp"
#include "surrocep/svg.hpp"

namespace surrocep::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string out_dir = ".";
};

struct SourceArgs {
  std::string data;
  std::string setting;
  Index n = 100;
  std::string noise;
};

struct ModelArgs {
  int design = 2;
  bool ci = true;
  std::string algorithm = "observed";
  int n_iter = 3000;
  int burn_in = 500;
  int coarse = 100;
  int fine = 100;
  double fine_fraction = 0.8;
  std::string prior_theta11;
  std::string prior_theta10;
  std::string prior_theta_t;
  std::vector<std::string> at;
  std::vector<std::string> quadratic;
  std::string baseline;
  bool no_marginalize = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Flat 'key = value' file; command-line flags override it");
  c.seed_opt = app->add_option("--seed", c.seed, "Root seed (default: drawn from system entropy and logged)");
  app->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
}

void add_source(CLI::App* app, SourceArgs& s) {
  auto* data = app->add_option("--data", s.data, "Masked trial data file (id,z,x_*,s1,t0,t1)");
  auto* setting = app->add_option("--setting", s.setting, "Simulate instead: A-E, DMD or a parameter file");
  data->excludes(setting);
  app->add_option("--n", s.n, "Sample size when simulating")->capture_default_str();
  app->add_option("--noise", s.noise, "Outcome noise: gaussian, t(df) or gamma(shape)");
}

void add_chain(CLI::App* app, ModelArgs& m) {
  app->add_option("--iter", m.n_iter, "MCMC iterations")->capture_default_str();
  app->add_option("--burn", m.burn_in, "Burn-in iterations")->capture_default_str();
  app->add_option("--grid-coarse", m.coarse, "Coarse griddy Gibbs points")->capture_default_str();
  app->add_option("--grid-fine", m.fine, "Fine griddy Gibbs points")->capture_default_str();
  app->add_option("--fine-fraction", m.fine_fraction, "Coarse mass re-gridded finely")->capture_default_str();
  app->add_option("--algorithm", m.algorithm, "imputation or observed")->capture_default_str();
}

void add_model(CLI::App* app, ModelArgs& m) {
  app->add_option("--design", m.design, "1 original-marginal, 2 original-conditional, 3 diff-marginal, 4 diff-conditional")
      ->capture_default_str();
  app->add_flag("--ci,!--no-ci", m.ci, "Impose S(1) independent of T(0) given T(1)")->capture_default_str();
  app->add_option("--prior-theta11", m.prior_theta11, "Prior on theta11, e.g. uniform(-1,1)");
  app->add_option("--prior-theta10", m.prior_theta10, "Prior on theta10");
  app->add_option("--prior-thetat", m.prior_theta_t, "Prior on thetaT, e.g. beta(5,6,-0.4,1) or point(0.2)");
  app->add_option("--at", m.at, "Covariate point for subgroup gamma0, comma separated (repeatable)");
  app->add_option("--quadratic", m.quadratic, "Covariates that also enter squared");
  app->add_option("--baseline", m.baseline, "Covariate holding the baseline measurement of T (default: first)");
  app->add_flag("--no-marginalize", m.no_marginalize, "Skip the covariate-averaged gamma pair");
  add_chain(app, m);
}

std::uint64_t resolve_seed(const Common& c, std::ostream& err) {
  if (c.seed_opt->count() > 0) return c.seed;
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << seed << '\n';
  return seed;
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw InputError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw InputError(std::string(what) + " '" + path + "' does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  write_text(path, ss.str());
}

Eigen::VectorXd parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string f;
  while (std::getline(ss, f, ',')) v.push_back(parse_double(f));
  if (v.empty()) throw InputError("empty covariate point");
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string f;
  while (std::getline(ss, f, ',')) {
    if (!f.empty()) v.push_back(parse_double(f));
  }
  return v;
}

int column_of(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name || names[i] == "x_" + name) return static_cast<int>(i);
  }
  throw InputError("no covariate named '" + name + "'");
}

FitOptions build_fit(const ModelArgs& m, const std::vector<std::string>& covariates, const SimSetting* setting,
                     std::uint64_t chain_seed) {
  FitOptions f;
  f.model.design = design_from_int(m.design);
  f.model.ci = m.ci;
  if (!m.prior_theta11.empty()) f.priors.theta11 = parse_prior(m.prior_theta11, PriorTarget::Theta11);
  if (!m.prior_theta10.empty()) f.priors.theta10 = parse_prior(m.prior_theta10, PriorTarget::Theta10);
  if (!m.prior_theta_t.empty()) f.priors.theta_t = parse_prior(m.prior_theta_t, PriorTarget::ThetaT);
  f.chain.n_iter = m.n_iter;
  f.chain.burn_in = m.burn_in;
  f.chain.seed = chain_seed;
  f.chain.grid = {m.coarse, m.fine, m.fine_fraction};
  f.chain.validate();
  f.marginalize = !m.no_marginalize;
  if (setting && m.quadratic.empty() && m.baseline.empty()) {
    f.model.basis = setting->basis;
    f.model.baseline_column = setting->baseline_column;
  } else {
    f.model.basis = CovariateBasis::linear(covariates);
    for (const auto& q : m.quadratic) f.model.basis.quadratic.push_back(column_of(covariates, q));
    f.model.baseline_column = m.baseline.empty() ? 0 : column_of(covariates, m.baseline);
  }
  if (is_conditional(f.model.design)) {
    for (const auto& a : m.at) {
      Eigen::VectorXd x = parse_point(a);
      if (x.size() != static_cast<Index>(covariates.size())) {
        throw InputError("--at point '" + a + "' needs " + std::to_string(covariates.size()) + " values");
      }
      f.gamma0_at.push_back(x);
    }
    if (f.gamma0_at.empty() && setting) f.gamma0_at = setting->report_at;
  }
  return f;
}

std::optional<SimSetting> load_setting(const SourceArgs& s) {
  if (s.setting.empty()) return std::nullopt;
  SimSetting setting = resolve_setting(s.setting);
  if (!s.noise.empty()) setting.noise = parse_noise(s.noise);
  return setting;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  Common common;
  SourceArgs source;
  bool full = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.source.setting.empty()) throw InputError("simulate needs --setting");
  const SimSetting setting = *load_setting(a.source);
  const fs::path dir = prepare_out_dir(a.common.out_dir);
  const std::uint64_t seed = resolve_seed(a.common, err);
  const SimulatedTrial trial = generate(setting, a.source.n, seed);
  write_with(dir / "data.csv", [&](std::ostream& o) { write_dataset(o, trial.masked); });
  if (a.full) write_with(dir / "full.csv", [&](std::ostream& o) { write_dataset(o, trial.full.complete()); });
  out << "wrote " << trial.masked.size() << " records from setting " << setting.name << " to "
      << (dir / "data.csv").string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
  Common common;
  SourceArgs source;
  ModelArgs model;
};

void write_summary(std::ostream& o, const PosteriorDraws& draws) {
  o << "parameter,mean,sd,q2.5,q97.5,mc_se,covers_zero\n";
  for (const auto& name : draws.names) {
    const PosteriorSummary s = summarize(draws.series(name));
    o << name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ',' << format_double(s.q025) << ','
      << format_double(s.q975) << ',' << format_double(s.mc_se) << ',' << (s.covers(0.0) ? 1 : 0) << '\n';
  }
}

void write_verdicts(std::ostream& o, const PosteriorDraws& draws) {
  o << "scope,gamma0,gamma1,gamma0_covers_zero,gamma1_covers_zero,verdict\n";
  auto row = [&](const std::string& scope, const std::string& g0, const std::string& g1) {
    const PosteriorSummary s0 = summarize(draws.series(g0));
    const PosteriorSummary s1 = summarize(draws.series(g1));
    o << scope << ',' << g0 << ',' << g1 << ',' << (s0.covers(0.0) ? 1 : 0) << ',' << (s1.covers(0.0) ? 1 : 0) << ','
      << (surrogate_valid(s0, s1) ? "valid" : "invalid") << '\n';
  };
  for (const auto& n : draws.names) {
    if (n.rfind("gamma0@", 0) == 0) row(n.substr(7), n, "gamma1");
  }
  if (draws.has("gamma0_m")) row("marginal", "gamma0_m", "gamma1_m");
  if (draws.has("gamma0")) row("marginal", "gamma0", "gamma1");
}

void require_source(const SourceArgs& s) {
  if (s.data.empty() && s.setting.empty()) throw InputError("need --data or --setting");
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  require_source(a.source);
  if (!a.source.data.empty()) require_file(a.source.data, "data file");
  const fs::path dir = prepare_out_dir(a.common.out_dir);
  const std::uint64_t seed = resolve_seed(a.common, err);
  const auto setting = load_setting(a.source);
  const Dataset data = setting ? generate(*setting, a.source.n, derive_seed(seed, 0)).masked
                               : read_dataset_file(a.source.data, Validation::Masked);
  const FitOptions fit = build_fit(a.model, data.covariate_names, setting ? &*setting : nullptr,
                                   setting ? derive_seed(seed, 1) : seed);
  const PosteriorDraws draws = run_mcmc(algorithm_from_string(a.model.algorithm), data, fit);

  write_with(dir / "draws.csv", [&](std::ostream& o) { draws.write_csv(o); });
  write_with(dir / "summary.csv", [&](std::ostream& o) { write_summary(o, draws); });
  write_with(dir / "verdicts.csv", [&](std::ostream& o) { write_verdicts(o, draws); });
  if (draws.size() >= kMinDrawsForDiagnostics) {
    const ConvergenceReport rep = convergence_report(draws);
    write_with(dir / "rhat.csv", [&](std::ostream& o) {
      o << "parameter,rhat,flagged\n";
      for (const auto& e : rep.entries) o << e.name << ',' << format_double(e.rhat) << ',' << (e.flagged ? 1 : 0) << '\n';
    });
    for (const auto& e : rep.entries) {
      if (e.flagged) err << "warning: split R-hat " << format_double(e.rhat) << " for " << e.name << '\n';
    }
  } else {
    err << "warning: fewer than " << kMinDrawsForDiagnostics << " draws; no R-hat report\n";
  }
  write_verdicts(out, draws);
  return kExitOk;
}

// --------------------------------------------------------------------- cep

struct CepArgs {
  Common common;
  std::string draws;
  std::string data;
  std::vector<std::string> at;
  std::string s_range;
  int points = kCepGridPoints;
};

struct CurveDraws {
  std::string label;
  Eigen::VectorXd gamma0;
  Eigen::VectorXd gamma1;
};

// Mean-structure basis recovered from the "s1:<term>" coefficient columns.
CovariateBasis basis_from_draws(const PosteriorDraws& d) {
  CovariateBasis b;
  std::vector<std::string> squared;
  for (const auto& n : d.names) {
    if (n.rfind("s1:", 0) != 0) continue;
    const std::string term = n.substr(3);
    if (term == "1") continue;
    if (term.size() > 2 && term.compare(term.size() - 2, 2, "^2") == 0) {
      squared.push_back(term.substr(0, term.size() - 2));
    } else {
      b.raw_names.push_back(term);
    }
  }
  for (const auto& s : squared) {
    const auto it = std::find(b.raw_names.begin(), b.raw_names.end(), s);
    if (it == b.raw_names.end()) throw DataFormatError("squared term without its linear term: " + s);
    b.quadratic.push_back(static_cast<int>(it - b.raw_names.begin()));
  }
  return b;
}

Eigen::MatrixXd coefficient_block(const PosteriorDraws& d, const CovariateBasis& b, int outcome) {
  const auto terms = b.term_names();
  Eigen::MatrixXd m(d.size(), static_cast<Index>(terms.size()));
  for (std::size_t t = 0; t < terms.size(); ++t) m.col(static_cast<Index>(t)) = d.series(coefficient_name(outcome, terms[t]));
  return m;
}

double exact_mean(const Eigen::VectorXd& v) {
  if (v.size() > 0 && v.minCoeff() == v.maxCoeff()) return v(0);
  return v.mean();
}

int cmd_cep(const CepArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.draws, "draw file");
  if (!a.data.empty()) require_file(a.data, "data file");
  if (a.points < 2) throw InputError("--points must be at least 2");
  const fs::path dir = prepare_out_dir(a.common.out_dir);
  PosteriorDraws draws;
  {
    std::ifstream in(a.draws);
    draws = PosteriorDraws::read_csv(in);
  }
  std::optional<Dataset> data;
  if (!a.data.empty()) data = read_dataset_file(a.data, Validation::None);

  std::vector<CurveDraws> curves;
  std::optional<Eigen::VectorXd> first_point;
  if (!a.at.empty()) {
    const CovariateBasis basis = basis_from_draws(draws);
    if (basis.n_raw() == 0) throw InputError("--at needs draws from a conditional design");
    const Eigen::MatrixXd bs = coefficient_block(draws, basis, kS1);
    const Eigen::MatrixXd b0 = coefficient_block(draws, basis, kT0);
    const Eigen::MatrixXd b1 = coefficient_block(draws, basis, kT1);
    const Eigen::VectorXd g1 = draws.series("gamma1");
    for (const auto& text : a.at) {
      const Eigen::VectorXd x = parse_point(text);
      if (x.size() != basis.n_raw()) {
        throw InputError("--at point '" + text + "' needs " + std::to_string(basis.n_raw()) + " values");
      }
      if (data) {
        for (Index j = 0; j < x.size(); ++j) {
          double lo = INFINITY;
          double hi = -INFINITY;
          for (const auto& r : data->records) {
            lo = std::min(lo, r.x(j));
            hi = std::max(hi, r.x(j));
          }
          if (x(j) < lo || x(j) > hi) err << "warning: covariate " << j + 1 << " of point " << text << " is outside the data\n";
        }
      }
      const Eigen::VectorXd w = basis.expand(x);
      CurveDraws c;
      c.label = "x=" + gamma0_name(x).substr(7);
      c.gamma1 = g1;
      c.gamma0 = (b1 - b0) * w - g1.cwiseProduct(bs * w);
      curves.push_back(std::move(c));
      if (!first_point) first_point = w;
    }
  } else {
    const auto [g0, g1] = headline_gamma_names(draws);
    curves.push_back({g0 == "gamma0_m" ? "marginal" : (g0 == "gamma0" ? "marginal" : g0.substr(7)), draws.series(g0),
                      draws.series(g1)});
    for (const auto& n : draws.names) {
      if (n.rfind("gamma0@", 0) == 0 && n != g0) curves.push_back({"x=" + n.substr(7), draws.series(n), draws.series("gamma1")});
    }
  }

  // Grid of surrogate values.
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::vector<double> observed_s;
  if (data) {
    for (const auto& r : data->records) {
      if (r.s1) observed_s.push_back(*r.s1);
    }
  }
  if (!a.s_range.empty()) {
    const auto r = parse_list(a.s_range);
    if (r.size() != 2 || !(r[0] < r[1])) throw InputError("--s-range must be lo,hi with lo < hi");
    s_lo = r[0];
    s_hi = r[1];
  } else if (!observed_s.empty()) {
    s_lo = *std::min_element(observed_s.begin(), observed_s.end());
    s_hi = *std::max_element(observed_s.begin(), observed_s.end());
  } else if (draws.has("s1:1") && draws.has("sd_s1")) {
    double mean = draws.series("s1:1").mean();
    if (first_point) mean = (coefficient_block(draws, basis_from_draws(draws), kS1) * *first_point).mean();
    const double sd = draws.series("sd_s1").mean();
    s_lo = mean - 3.0 * sd;
    s_hi = mean + 3.0 * sd;
  } else {
    s_lo = -3.0;
    s_hi = 3.0;
  }
  if (!(s_hi > s_lo)) s_hi = s_lo + 1.0;
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(a.points, s_lo, s_hi);

  struct Plotted {
    std::string label;
    Eigen::VectorXd mean;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
  };
  std::vector<Plotted> plotted;
  for (const auto& c : curves) {
    Plotted p{c.label, Eigen::VectorXd(s.size()), Eigen::VectorXd(s.size()), Eigen::VectorXd(s.size())};
    for (Index i = 0; i < s.size(); ++i) {
      const Eigen::VectorXd v = c.gamma0 + c.gamma1 * s(i);
      std::vector<double> vs(v.data(), v.data() + v.size());
      p.mean(i) = exact_mean(v);
      p.lower(i) = quantile(vs, 0.025);
      p.upper(i) = quantile(vs, 0.975);
    }
    plotted.push_back(std::move(p));
  }

  write_with(dir / "cep_curve.csv", [&](std::ostream& o) {
    o << "curve,s,mean,lower,upper\n";
    for (const auto& p : plotted) {
      for (Index i = 0; i < s.size(); ++i) {
        o << p.label << ',' << format_double(s(i)) << ',' << format_double(p.mean(i)) << ','
          << format_double(p.lower(i)) << ',' << format_double(p.upper(i)) << '\n';
      }
    }
  });

  std::vector<double> yvals{0.0};
  for (const auto& p : plotted) {
    yvals.insert(yvals.end(), p.lower.data(), p.lower.data() + p.lower.size());
    yvals.insert(yvals.end(), p.upper.data(), p.upper.data() + p.upper.size());
  }
  const PlotRange yr = PlotRange::of(yvals);
  SvgPlot plot(720, 480, {s_lo, s_hi}, yr);
  plot.title("Causal effect predictiveness");
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t k = 0; k < plotted.size(); ++k) plot.band(s, plotted[k].lower, plotted[k].upper, palette(k));
  plot.hline(0.0, "#555555");
  for (std::size_t k = 0; k < plotted.size(); ++k) {
    plot.polyline(s, plotted[k].mean, palette(k), 2.0);
    legend.emplace_back(plotted[k].label, palette(k));
  }
  if (observed_s.size() >= 2) {
    const Eigen::VectorXd dens = kernel_density(observed_s, s);
    const double peak = dens.maxCoeff();
    if (peak > 0.0) {
      // Density of observed S(1) drawn in the bottom quarter of the panel.
      const Eigen::VectorXd scaled = (dens / peak * 0.25 * yr.span()).array() + yr.lo;
      plot.polyline(s, scaled, "#777777", 1.2, "2,2");
      legend.emplace_back("observed S(1) density", "#777777");
    }
  }
  plot.legend(legend);
  plot.axes("S(1)", "E[T(1) - T(0) | S(1)]");
  write_text(dir / "cep.svg", plot.str());
  out << "wrote " << plotted.size() << " curve(s) to " << (dir / "cep.svg").string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- replicate

struct ReplicateArgs {
  Common common;
  SourceArgs source;
  ModelArgs model;
  int reps = 100;
  int threads = 0;
  bool scale = false;
  Index truth_n = 1000000;
};

int cmd_replicate(const ReplicateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.source.setting.empty()) throw InputError("replicate needs --setting");
  const fs::path dir = prepare_out_dir(a.common.out_dir);
  const std::uint64_t seed = resolve_seed(a.common, err);
  ReplicationConfig cfg;
  cfg.setting = *load_setting(a.source);
  cfg.n = a.source.n;
  cfg.reps = a.reps;
  cfg.algorithm = algorithm_from_string(a.model.algorithm);
  cfg.fit = build_fit(a.model, cfg.setting.covariate_names(), &cfg.setting, 0);
  cfg.seed = seed;
  cfg.threads = a.threads;
  cfg.scale_by_oracle = a.scale;
  cfg.truth_n = a.truth_n;
  const ReplicationSummary summary = run_replications(cfg);
  write_with(dir / "replicate.csv", [&](std::ostream& o) { summary.write_long(o); });
  for (const auto& m : summary.failure_messages) err << "replication failure: " << m << '\n';
  out << summary.reps - summary.failures << " of " << summary.reps << " replications succeeded; wrote "
      << (dir / "replicate.csv").string() << '\n';
  return summary.failures == summary.reps ? kExitNumerical : kExitOk;
}

// ------------------------------------------------------------- sensitivity

struct SensitivityArgs {
  Common common;
  SourceArgs source;
  ModelArgs model;
  std::string values;
  std::vector<std::string> priors;
};

int cmd_sensitivity(const SensitivityArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<PriorSpec> settings;
  for (double v : parse_list(a.values)) {
    if (!(v > -1.0 && v < 1.0)) throw InputError("thetaT values must lie in (-1, 1), got " + format_double(v));
    settings.emplace_back(PointMass{v}, PriorTarget::ThetaT);
  }
  for (const auto& p : a.priors) settings.push_back(parse_prior(p, PriorTarget::ThetaT));
  require_source(a.source);
  if (!a.source.data.empty()) require_file(a.source.data, "data file");
  const fs::path dir = prepare_out_dir(a.common.out_dir);
  const std::uint64_t seed = resolve_seed(a.common, err);
  const auto setting = load_setting(a.source);
  const Dataset data = setting ? generate(*setting, a.source.n, derive_seed(seed, 0)).masked
                               : read_dataset_file(a.source.data, Validation::Masked);
  const FitOptions fit = build_fit(a.model, data.covariate_names, setting ? &*setting : nullptr,
                                   setting ? derive_seed(seed, 1) : seed);
  const auto rows = sensitivity_scan(data, fit, settings);

  write_with(dir / "sensitivity.csv", [&](std::ostream& o) {
    o << "setting,theta_t,gamma0_mean,gamma0_sd,gamma0_q2.5,gamma0_q97.5,gamma1_mean,gamma1_sd,gamma1_q2.5,gamma1_q97.5\n";
    for (const auto& r : rows) {
      o << r.label << ',' << format_double(r.theta_t);
      for (const PosteriorSummary* s : {&r.gamma0, &r.gamma1}) {
        o << ',' << format_double(s->mean) << ',' << format_double(s->sd) << ',' << format_double(s->q025) << ','
          << format_double(s->q975);
      }
      o << '\n';
    }
  });

  std::vector<SvgPlot> panels;
  std::vector<double> xs;
  for (const auto& r : rows) xs.push_back(r.theta_t);
  const PlotRange xr = PlotRange::of(xs, 0.1);
  for (int g = 0; g < 2; ++g) {
    std::vector<double> ys{0.0};
    for (const auto& r : rows) {
      const PosteriorSummary& s = g == 0 ? r.gamma0 : r.gamma1;
      ys.push_back(s.q025);
      ys.push_back(s.q975);
    }
    SvgPlot p(640, 320, xr, PlotRange::of(ys));
    p.title(g == 0 ? "gamma0 by thetaT setting" : "gamma1 by thetaT setting");
    p.hline(0.0, "#555555");
    for (const auto& r : rows) {
      const PosteriorSummary& s = g == 0 ? r.gamma0 : r.gamma1;
      p.segment(r.theta_t, s.q025, r.theta_t, s.q975, palette(static_cast<std::size_t>(g)), 1.5);
      p.marker(r.theta_t, s.mean, palette(static_cast<std::size_t>(g)));
    }
    p.axes("thetaT (fixed value or prior mean)", g == 0 ? "gamma0" : "gamma1");
    panels.push_back(std::move(p));
  }
  write_text(dir / "sensitivity.svg", stack_svg(panels));
  out << rows.size() << " thetaT setting(s); wrote " << (dir / "sensitivity.csv").string() << '\n';
  return kExitOk;
}

// Splices the entries of a --config file in as "--key=value" tokens, skipping
// keys the command line already sets. CLI11 only reads config files attached
// to the root app, so subcommands go through this instead.
std::vector<std::string> with_config_entries(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path) return args;
  const KeyValues kv = read_key_values_file(*path);
  auto given = [&](const std::string& key) {
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& a = args[i];
      if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
      if (key == "ci" && a == "--no-ci") return true;
    }
    return false;
  };
  std::vector<std::string> out{args.front()};
  for (const auto& [key, value] : kv) {
    if (key == "config" || given(key)) continue;
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian surrogate endpoint validation with principal stratification"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated trial");
  add_common(simulate, sim.common);
  add_source(simulate, sim.source);
  simulate->add_flag("--full", sim.full, "Also write the complete counterfactual table");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Fit the potential-outcome model and report gamma0/gamma1");
  add_common(fitc, fit.common);
  add_source(fitc, fit.source);
  add_model(fitc, fit.model);

  CepArgs cep;
  auto* cepc = app.add_subcommand("cep", "Plot CEP curves from a draw file");
  add_common(cepc, cep.common);
  cepc->add_option("--draws", cep.draws, "draws.csv written by fit")->required();
  cepc->add_option("--data", cep.data, "Trial data for the S(1) density and range checks");
  cepc->add_option("--at", cep.at, "Covariate point, comma separated (repeatable)");
  cepc->add_option("--s-range", cep.s_range, "lo,hi of the S(1) axis");
  cepc->add_option("--points", cep.points, "Grid points along S(1)")->capture_default_str();

  ReplicateArgs rep;
  auto* repc = app.add_subcommand("replicate", "Repeat simulate+fit and summarise bias, SE, SD and coverage");
  add_common(repc, rep.common);
  add_source(repc, rep.source);
  add_model(repc, rep.model);
  repc->add_option("--reps", rep.reps, "Replications")->capture_default_str();
  repc->add_option("--threads", rep.threads, "Worker threads (0: SURROCEP_THREADS or all cores)");
  repc->add_flag("--scale-by-oracle", rep.scale, "Add bias/SE/SD divided by the complete-data estimate SD");
  repc->add_option("--truth-n", rep.truth_n, "Sample size of the complete-data truth fit")->capture_default_str();

  SensitivityArgs sens;
  auto* sensc = app.add_subcommand("sensitivity", "Refit over fixed thetaT values or thetaT priors");
  add_common(sensc, sens.common);
  add_source(sensc, sens.source);
  add_model(sensc, sens.model);
  sensc->add_option("--values", sens.values, "Comma-separated fixed thetaT values in (-1, 1)");
  sensc->add_option("--priors", sens.priors, "thetaT priors, e.g. beta(5;6;-0.4;1) (repeatable)");

  std::vector<std::string> expanded;
  try {
    expanded = with_config_entries(args);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*fitc) return cmd_fit(fit, out, err);
    if (*cepc) return cmd_cep(cep, out, err);
    if (*repc) return cmd_replicate(rep, out, err);
    if (*sensc) return cmd_sensitivity(sens, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitInput;
}

}  // namespace surrocep::cli
