#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pcs/core.hpp"
#include "pcs/critical.hpp"
#include "pcs/csv.hpp"
#include "pcs/rng.hpp"
#include "pcs/special.hpp"

using namespace pcs;
namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* bin = std::getenv("PCS_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "PCS_BIN must point at the pcs binary");
  return bin;
}

int run(const std::string& args, const std::string& redirect = "") {
  std::string cmd = binary() + " " + args;
  if (!redirect.empty())
    cmd += " > " + redirect + " 2>&1";
  else
    cmd += " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct WorkDir {
  fs::path dir;
  WorkDir() {
    dir = fs::temp_directory_path() / "pcs_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

PanelDataset two_cluster_panel(int per_group, int T, double noise, std::uint64_t seed) {
  PanelDataset p;
  p.n_units = 2 * per_group;
  p.n_periods = T;
  p.covariate_dim = 1;
  p.outcomes.resize(p.n_units, T);
  p.covariates.assign(p.n_units, Eigen::MatrixXd::Ones(T, 1));
  SplitMix64 rng(seed);
  for (int i = 0; i < p.n_units; ++i) {
    const double level = i < per_group ? 0.0 : 1.5;
    for (int t = 0; t < T; ++t)
      p.outcomes(i, t) = level + noise * norm_quantile(rng.uniform01());
    p.unit_labels.push_back(std::to_string(i + 1));
  }
  for (int t = 0; t < T; ++t) p.time_labels.push_back(std::to_string(t + 1));
  return p;
}

}  // namespace

TEST_CASE("critval output matches the library to printed precision") {
  WorkDir w;
  const std::string out = w / "cv.txt";
  REQUIRE(run("critval --method sns --alpha 0.1 --n 50 --groups 3 --dof 39", out) == 0);
  const double printed = std::stod(slurp(out));
  CriticalValueRequest req;
  req.method = Method::SNS;
  req.alpha = 0.1;
  req.n_eff = 50;
  req.groups = 3;
  req.dof = 39.0;
  QmcConfig qmc;
  CHECK(printed == doctest::Approx(critical_value(req, qmc)).epsilon(1e-11));

  REQUIRE(run("critval --method max --alpha 0.1 --n 20 --groups 3 --dof 9", out) == 0);
  req.method = Method::MAX;
  req.n_eff = 20;
  req.dof = 9.0;
  req.omega = Eigen::MatrixXd::Identity(2, 2);
  CHECK(std::stod(slurp(out)) == doctest::Approx(critical_value(req, qmc)).epsilon(1e-9));
}

TEST_CASE("analyze is byte-identical across reruns and thread counts") {
  WorkDir w;
  auto panel = two_cluster_panel(3, 12, 0.4, 7u);
  save_panel(w / "panel.csv", panel);
  GroupModel model;
  model.n_groups = 2;
  model.time_constant = true;
  model.coefficients = {Eigen::MatrixXd::Zero(12, 1),
                        Eigen::MatrixXd::Constant(12, 1, 1.5)};
  save_coefficients(w / "coef.csv", model);

  const std::string base = "analyze --panel " + (w / "panel.csv") + " --coef " +
                           (w / "coef.csv") + " --alpha 0.1 --beta 0.02 --seed 3";
  REQUIRE(run(base + " --out " + (w / "r1.json")) == 0);
  REQUIRE(run(base + " --out " + (w / "r2.json")) == 0);
  REQUIRE(run(base + " --threads 4 --out " + (w / "r3.json")) == 0);
  const std::string r1 = slurp(w / "r1.json");
  CHECK(r1 == slurp(w / "r2.json"));
  CHECK(r1 == slurp(w / "r3.json"));
  CHECK(r1.find("\"schema_version\": 1") != std::string::npos);
  CHECK(r1.find("\"cs_sns\"") != std::string::npos);
  CHECK(r1.find("\"cs_qlr\"") != std::string::npos);
}

TEST_CASE("estimate emits files the loaders accept") {
  WorkDir w;
  auto panel = two_cluster_panel(4, 10, 0.3, 21u);
  save_panel(w / "panel.csv", panel);
  REQUIRE(run("estimate --panel " + (w / "panel.csv") +
              " --groups 2 --time-constant --seed 5 --out-coef " + (w / "coef.csv") +
              " --out-assign " + (w / "assign.csv")) == 0);
  auto model = load_coefficients(w / "coef.csv", 10);
  CHECK(model.n_groups == 2);
  CHECK(model.time_constant);
  CHECK(model.coefficients[0](0, 0) == doctest::Approx(0.0).epsilon(0.5));
  CHECK(model.coefficients[1](0, 0) == doctest::Approx(1.5).epsilon(0.5));
  const std::string assign = slurp(w / "assign.csv");
  CHECK(assign.rfind("unit,group\n", 0) == 0);
  CHECK(std::count(assign.begin(), assign.end(), '\n') == 9);
}

TEST_CASE("simulate writes a deterministic coverage table") {
  WorkDir w;
  const std::string base =
      "simulate --design het --n 6 --t 8 --sigma 0.25 --reps 3 --methods sns "
      "--beta 0.01 --seed 11";
  REQUIRE(run(base + " --out " + (w / "c1.csv")) == 0);
  REQUIRE(run(base + " --threads 3 --out " + (w / "c2.csv")) == 0);
  CHECK(slurp(w / "c1.csv") == slurp(w / "c2.csv"));
  REQUIRE(run("simulate --design a --n 5 --t 10 --sigma 0.25 --reps 2 --methods max "
              "--limit --seed 1 --out " +
              (w / "c3.csv")) == 0);
  CHECK(slurp(w / "c3.csv").find("homoscedastic_A,max") != std::string::npos);
}

TEST_CASE("input and numerical failures use distinct exit codes") {
  WorkDir w;
  auto panel = two_cluster_panel(2, 12, 0.4, 3u);
  save_panel(w / "panel.csv", panel);
  GroupModel model;
  model.n_groups = 2;
  model.time_constant = true;
  model.coefficients = {Eigen::MatrixXd::Zero(12, 1),
                        Eigen::MatrixXd::Constant(12, 1, 1.5)};
  save_coefficients(w / "coef.csv", model);
  const std::string pair =
      " --panel " + (w / "panel.csv") + " --coef " + (w / "coef.csv");

  CHECK(run("analyze --panel does_not_exist.csv --coef " + (w / "coef.csv")) == 2);
  CHECK(run("analyze" + pair + " --beta 0.05") == 2);
  CHECK(run("analyze" + pair + " --jackknife") == 2);
  CHECK(run("simulate --design nope") == 2);
  CHECK(run("critval --method sns --n 10") == 2);  // no dof, no --limit
  // intercept-only covariates vanish under within-demeaning: numerical failure
  CHECK(run("analyze" + pair + " --fixed-effects --jackknife") == 3);
  CHECK(run("") == 2);
  CHECK(run("--help") == 0);
}
