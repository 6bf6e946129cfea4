#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "doctest.h"
#include "surrocep/data.hpp"
#include "surrocep/samplers.hpp"

namespace fs = std::filesystem;
using namespace surrocep;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("surrocep_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  fs::path path_;
};

std::vector<std::vector<std::string>> read_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string f;
    std::istringstream ls(line);
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_CASE("simulate writes a deterministic masked file") {
  TempDir a, b;
  REQUIRE(run_cli({"simulate", "--setting", "A", "--n", "100", "--seed", "1", "--out", a.path().string()}).code == 0);
  REQUIRE(run_cli({"simulate", "--setting", "A", "--n", "100", "--seed", "1", "--out", b.path().string()}).code == 0);
  CHECK(slurp(a / "data.csv") == slurp(b / "data.csv"));
  const Dataset d = read_dataset_file(a / "data.csv");
  CHECK(d.size() == 100);
  CHECK_FALSE(fs::exists(a / "full.csv"));

  TempDir e;
  REQUIRE(run_cli({"simulate", "--setting", "E", "--n", "100", "--seed", "2", "--full", "--out", e.path().string()}).code == 0);
  for (const auto& r : read_dataset_file(e / "data.csv").records) CHECK((r.x(0) == 0.0 || r.x(0) == 1.0));
  const Dataset full = read_dataset_file(e / "full.csv", Validation::Complete);
  CHECK(full.size() == 100);
}

TEST_CASE("missing seed is drawn and logged") {
  TempDir a;
  const Result r = run_cli({"simulate", "--setting", "B", "--n", "10", "--out", a.path().string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("seed: ") != std::string::npos);
}

TEST_CASE("input errors exit with code 2") {
  TempDir a;
  const Result unknown = run_cli({"simulate", "--setting", "Z", "--seed", "1", "--out", a.path().string()});
  CHECK(unknown.code == cli::kExitInput);
  CHECK(unknown.err.find("A, B, C, D, E") != std::string::npos);

  spit(a.path() / "empty.csv", "");
  CHECK(run_cli({"fit", "--data", a / "empty.csv", "--seed", "1", "--out", a.path().string()}).code == cli::kExitInput);
  spit(a.path() / "header.csv", "id,z,x_base,s1,t0,t1\n");
  CHECK(run_cli({"fit", "--data", a / "header.csv", "--seed", "1", "--out", a.path().string()}).code == cli::kExitInput);
  spit(a.path() / "bad.csv", "id,z,x_base,s1,t0,t1\n1,0,0.5,1.0,2.0,\n");
  CHECK(run_cli({"fit", "--data", a / "bad.csv", "--seed", "1", "--out", a.path().string()}).code == cli::kExitInput);
  CHECK(run_cli({"fit", "--data", a / "missing.csv", "--seed", "1"}).code == cli::kExitInput);
  CHECK(run_cli({"fit", "--seed", "1", "--out", a.path().string()}).code == cli::kExitInput);
  CHECK(run_cli({"fit", "--setting", "B", "--data", a / "bad.csv"}).code == cli::kExitInput);
  CHECK(run_cli({"fit", "--setting", "B", "--design", "7", "--seed", "1", "--out", a.path().string()}).code ==
        cli::kExitInput);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitInput);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);

  spit(a.path() / "bad_draws.csv", "iter,gamma0,gamma1\n1,0.1\n");
  CHECK(run_cli({"cep", "--draws", a / "bad_draws.csv", "--seed", "1", "--out", a.path().string()}).code ==
        cli::kExitInput);
}

TEST_CASE("fit writes summaries, verdicts and diagnostics") {
  TempDir a;
  const Result r = run_cli({"fit", "--setting", "B", "--n", "100", "--seed", "3", "--iter", "1200", "--burn", "200",
                            "--out", a.path().string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"draws.csv", "summary.csv", "verdicts.csv", "rhat.csv"}) CHECK(fs::exists(a.path() / f));
  const auto summary = read_rows(a.path() / "summary.csv");
  CHECK(summary[0] == std::vector<std::string>{"parameter", "mean", "sd", "q2.5", "q97.5", "mc_se", "covers_zero"});
  const auto verdicts = read_rows(a.path() / "verdicts.csv");
  CHECK(verdicts[0] ==
        std::vector<std::string>{"scope", "gamma0", "gamma1", "gamma0_covers_zero", "gamma1_covers_zero", "verdict"});
  CHECK(verdicts.size() >= 2);
  std::ifstream in(a / "draws.csv");
  const PosteriorDraws d = PosteriorDraws::read_csv(in);
  CHECK(d.size() == 1000);
  CHECK(d.has("gamma0@1"));
}

TEST_CASE("imputation and observed-data fits agree on the same data") {
  TempDir a, obs, imp;
  REQUIRE(run_cli({"simulate", "--setting", "B", "--n", "100", "--seed", "4", "--out", a.path().string()}).code == 0);
  REQUIRE(run_cli({"fit", "--data", a / "data.csv", "--design", "1", "--seed", "5", "--algorithm", "observed", "--out",
                   obs.path().string()})
              .code == 0);
  REQUIRE(run_cli({"fit", "--data", a / "data.csv", "--design", "1", "--seed", "5", "--algorithm", "imputation", "--out",
                   imp.path().string()})
              .code == 0);
  std::ifstream io(obs / "draws.csv"), ii(imp / "draws.csv");
  const PosteriorDraws x = PosteriorDraws::read_csv(io);
  const PosteriorDraws y = PosteriorDraws::read_csv(ii);
  for (const std::string name : {"gamma0", "gamma1"}) {
    const PosteriorSummary sx = summarize(x.series(name));
    const PosteriorSummary sy = summarize(y.series(name));
    INFO(name);
    CHECK(std::abs(sx.mean - sy.mean) < 3.0 * std::hypot(sx.mc_se, sy.mc_se));
  }
}

TEST_CASE("cep passes exact draws through") {
  TempDir a;
  std::string text = "iter,gamma0,gamma1\n";
  for (int i = 1; i <= 20; ++i) text += std::to_string(i) + ",0,0.55\n";
  spit(a.path() / "draws.csv", text);
  REQUIRE(run_cli({"cep", "--draws", a / "draws.csv", "--s-range", "-2,2", "--points", "5", "--seed", "1", "--out",
                   a.path().string()})
              .code == 0);
  const auto rows = read_rows(a.path() / "cep_curve.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"curve", "s", "mean", "lower", "upper"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double s = parse_double(rows[i][1]);
    CHECK(parse_double(rows[i][2]) == 0.55 * s);
    CHECK(rows[i][3] == rows[i][2]);
    CHECK(rows[i][4] == rows[i][2]);
  }
  CHECK(parse_double(rows[3][2]) == 0.0);
  const std::string svg = slurp(a.path() / "cep.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  // a single draw collapses the band as well
  spit(a.path() / "one.csv", "iter,gamma0,gamma1\n1,0.3,-0.2\n");
  REQUIRE(run_cli({"cep", "--draws", a / "one.csv", "--s-range", "0,1", "--points", "3", "--seed", "1", "--out",
                   a.path().string()})
              .code == 0);
  for (const auto& row : read_rows(a.path() / "cep_curve.csv")) {
    if (row[0] == "curve") continue;
    CHECK(row[3] == row[2]);
    CHECK(row[4] == row[2]);
  }
}

TEST_CASE("cep orders the DMD age curves") {
  TempDir a;
  REQUIRE(run_cli({"fit", "--setting", "DMD", "--n", "400", "--seed", "6", "--quadratic", "x_age", "--baseline", "x_nsaa",
                   "--iter", "1500", "--burn", "300", "--out", a.path().string()})
              .code == 0);
  REQUIRE(run_cli({"cep", "--draws", a / "draws.csv", "--at", "4,24", "--at", "5,24", "--at", "6,24", "--s-range", "0,16",
                   "--points", "9", "--seed", "1", "--out", a.path().string()})
              .code == 0);
  std::map<std::string, std::vector<double>> curves;
  for (const auto& row : read_rows(a.path() / "cep_curve.csv")) {
    if (row[0] != "curve") curves[row[0]].push_back(parse_double(row[2]));
  }
  REQUIRE(curves.size() == 3);
  const auto& c4 = curves.begin()->second;
  const auto& c6 = curves.rbegin()->second;
  for (std::size_t i = 0; i < c4.size(); ++i) CHECK(c6[i] < c4[i]);
}

TEST_CASE("replicate output shape") {
  TempDir a, b;
  REQUIRE(run_cli({"replicate", "--setting", "B", "--reps", "1", "--iter", "400", "--burn", "100", "--truth-n", "20000",
                   "--seed", "7", "--out", a.path().string()})
              .code == 0);
  const std::string one = slurp(a.path() / "replicate.csv");
  CHECK(one.find(",sd,") == std::string::npos);
  CHECK(one.find("B,2-ci,run,reps,1") != std::string::npos);

  REQUIRE(run_cli({"replicate", "--setting", "B", "--reps", "3", "--iter", "400", "--burn", "100", "--truth-n", "20000",
                   "--scale-by-oracle", "--seed", "7", "--out", b.path().string()})
              .code == 0);
  const std::string three = slurp(b.path() / "replicate.csv");
  CHECK(three.find(",gamma1,sd,") != std::string::npos);
  CHECK(three.find(",gamma1,scaled_sd,") != std::string::npos);
  CHECK(three.find(",gamma1,oracle_sd,") != std::string::npos);
}

TEST_CASE("sensitivity") {
  TempDir a;
  const Result bad = run_cli({"sensitivity", "--setting", "B", "--values", "1.0", "--seed", "1", "--out", a.path().string()});
  CHECK(bad.code == cli::kExitInput);
  CHECK(run_cli({"sensitivity", "--setting", "B", "--values=-1", "--seed", "1", "--out", a.path().string()}).code ==
        cli::kExitInput);

  REQUIRE(run_cli({"sensitivity", "--setting", "B", "--values", "0", "--iter", "600", "--burn", "100", "--seed", "1",
                   "--out", a.path().string()})
              .code == 0);
  CHECK(read_rows(a.path() / "sensitivity.csv").size() == 2);

  REQUIRE(run_cli({"sensitivity", "--setting", "B", "--design", "1", "--values=-0.5,0,0.5", "--iter", "1500", "--burn",
                   "300", "--seed", "2", "--out", a.path().string()})
              .code == 0);
  const auto rows = read_rows(a.path() / "sensitivity.csv");
  REQUIRE(rows.size() == 4);
  std::size_t g1 = 0;
  for (std::size_t j = 0; j < rows[0].size(); ++j) {
    if (rows[0][j] == "gamma1_mean") g1 = j;
  }
  REQUIRE(g1 > 0);
  CHECK(parse_double(rows[1][g1]) > parse_double(rows[2][g1]));
  CHECK(parse_double(rows[2][g1]) > parse_double(rows[3][g1]));
  CHECK(fs::exists(a.path() / "sensitivity.svg"));
}

TEST_CASE("config file values apply and flags override them") {
  TempDir a, b, c;
  spit(a.path() / "run.cfg", "# simulation settings\nsetting = B\nn = 40\nseed = 11\n");
  REQUIRE(run_cli({"simulate", "--config", a / "run.cfg", "--out", b.path().string()}).code == 0);
  CHECK(read_dataset_file(b / "data.csv").size() == 40);
  REQUIRE(run_cli({"simulate", "--config", a / "run.cfg", "--n", "60", "--out", c.path().string()}).code == 0);
  CHECK(read_dataset_file(c / "data.csv").size() == 60);

  TempDir d;
  REQUIRE(run_cli({"simulate", "--setting", "B", "--n", "40", "--seed", "11", "--out", d.path().string()}).code == 0);
  CHECK(slurp(b / "data.csv") == slurp(d / "data.csv"));

  TempDir e;
  spit(a.path() / "fit.cfg", "setting = B\nci = false\ndesign = 1\niter = 400\nburn = 100\nseed = 3\n");
  REQUIRE(run_cli({"fit", "--config", a / "fit.cfg", "--out", e.path().string()}).code == 0);
  std::ifstream in(e / "draws.csv");
  const PosteriorDraws draws = PosteriorDraws::read_csv(in);
  CHECK(draws.size() == 300);
  CHECK(draws.has("gamma0"));
  CHECK_FALSE((draws.series("theta10").array() == draws.series("thetaT").array() * draws.series("theta11").array()).all());

  CHECK(run_cli({"simulate", "--config", a / "nope.cfg", "--out", e.path().string()}).code == cli::kExitInput);
}

TEST_CASE("masked data round-trips through the file format") {
  TempDir a;
  REQUIRE(run_cli({"simulate", "--setting", "D", "--n", "50", "--seed", "12", "--out", a.path().string()}).code == 0);
  const Dataset d = read_dataset_file(a / "data.csv");
  std::ostringstream out;
  write_dataset(out, d);
  CHECK(out.str() == slurp(a.path() / "data.csv"));
  std::istringstream in(out.str());
  const Dataset back = read_dataset(in);
  CHECK(back.records == d.records);
  CHECK(back.covariate_names == d.covariate_names);
  for (double v : {0.1, 1.0 / 3.0, -2.5e-310, 1e300, 123456789.123456789}) CHECK(parse_double(format_double(v)) == v);
}
