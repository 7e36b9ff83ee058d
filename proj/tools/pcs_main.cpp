#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pcs/confidence.hpp"
#include "pcs/core.hpp"
#include "pcs/critical.hpp"
#include "pcs/csv.hpp"
#include "pcs/errors.hpp"
#include "pcs/estimation.hpp"
#include "pcs/moments.hpp"
#include "pcs/report.hpp"
#include "pcs/simulation.hpp"
#include "pcs/threads.hpp"

namespace {

using namespace pcs;

struct CommonOpts {
  double alpha = 0.1;
  double beta = 0.0;
  double epsilon = 0.012;
  std::vector<std::string> methods = {"sns", "max", "qlr"};
  std::uint64_t seed = 0;
  int threads = 0;
  int qmc_points = 4096;
  int qmc_randomizations = 12;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_inference = true) {
  if (with_inference) {
    cmd->add_option("--alpha", o.alpha, "nominal level of the joint confidence set")
        ->capture_default_str();
    cmd->add_option("--beta", o.beta, "unit-selection level, 0 <= beta < alpha/3")
        ->capture_default_str();
    cmd->add_option("--epsilon", o.epsilon, "correlation matrix regularization")
        ->capture_default_str();
    cmd->add_option("--methods", o.methods, "procedures to run (sns, max, qlr)")
        ->capture_default_str();
    cmd->add_option("--qmc-points", o.qmc_points, "lattice points per randomization")
        ->capture_default_str();
    cmd->add_option("--qmc-randomizations", o.qmc_randomizations,
                    "random shifts for QMC error estimates")
        ->capture_default_str();
  }
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads (0 = auto, env PCS_THREADS)")
      ->capture_default_str();
}

QmcConfig make_qmc(const CommonOpts& o) {
  QmcConfig qmc;
  qmc.n_points = o.qmc_points;
  qmc.n_randomizations = o.qmc_randomizations;
  qmc.seed = o.seed;
  return qmc;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  if (names.empty()) throw DomainError("no methods requested");
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(method_from_string(n));
  return out;
}

void check_beta(double alpha, double beta) {
  if (!(beta >= 0.0 && beta < alpha / 3.0))
    throw InvalidBeta("beta must satisfy 0 <= beta < alpha/3");
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(path + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw ParseError(path + ": ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw ParseError("failed writing " + path);
}

struct AnalyzeOpts {
  CommonOpts common;
  std::string panel_path;
  std::string coef_path;
  int groups = 0;
  std::string out_path = "report.json";
  bool fixed_effects = false;
  bool jackknife = false;
  bool time_constant = false;
  int restarts = 50;
  int max_iter = 200;
  double tol = 1e-10;
};

int run_analyze(const AnalyzeOpts& o) {
  check_beta(o.common.alpha, o.common.beta);
  const QmcConfig qmc = make_qmc(o.common);
  const auto methods = parse_methods(o.common.methods);

  PanelDataset panel = load_panel(o.panel_path);
  PanelDataset assignment_panel = panel;
  PanelDataset inference_panel = panel;
  if (o.fixed_effects) {
    assignment_panel = fe_transform(panel);
    inference_panel = o.jackknife ? panel : assignment_panel;
  }

  GroupModel model;
  if (!o.coef_path.empty()) {
    model = load_coefficients(o.coef_path, panel.n_periods);
  } else {
    EstimatorConfig est;
    est.n_groups = o.groups;
    est.restarts = o.restarts;
    est.max_iter = o.max_iter;
    est.tol = o.tol;
    est.seed = o.common.seed;
    est.time_constant = o.time_constant;
    est.threads = thread_count(o.common.threads);
    model = fit_grouped(assignment_panel, est);
  }
  model = assign_groups(assignment_panel, model);

  InferenceOptions opts;
  opts.epsilon = o.common.epsilon;
  opts.jackknife = o.fixed_effects && o.jackknife;
  opts.threads = thread_count(o.common.threads);

  std::vector<MethodResults> results;
  for (Method m : methods) {
    MethodResults r;
    r.method = m;
    r.cs = unit_selection_cs(inference_panel, model, o.common.alpha, o.common.beta,
                             m, qmc, opts);
    r.pvals = pvalues(inference_panel, model, m, r.cs.n_selected, qmc, opts);
    results.push_back(std::move(r));
  }
  write_text(o.out_path, render_report(panel, model, results, o.common.alpha,
                                       o.common.beta, o.common.epsilon,
                                       o.common.seed));
  return 0;
}

struct SimulateOpts {
  CommonOpts common;
  std::string design = "a";
  int n_units = 50;
  int n_periods = 40;
  double sigma = 0.5;
  int g0 = 1;
  double high_noise_prob = 0.5;
  int reps = 1000;
  bool gaussian_limit = false;
  std::string out_path = "coverage.csv";
};

int run_simulate(const SimulateOpts& o) {
  check_beta(o.common.alpha, o.common.beta);
  DesignSpec spec;
  spec.kind = design_from_string(o.design);
  spec.n_units = o.n_units;
  spec.n_periods = o.n_periods;
  spec.sigma = o.sigma;
  spec.g0 = o.g0;
  spec.high_noise_prob = o.high_noise_prob;

  InferenceOptions opts;
  opts.epsilon = o.common.epsilon;
  opts.gaussian_limit = o.gaussian_limit;
  opts.threads = thread_count(o.common.threads);

  auto table = run_study(spec, parse_methods(o.common.methods), o.common.alpha,
                         o.common.beta, o.reps, o.common.seed, make_qmc(o.common),
                         opts);
  save_coverage_csv(o.out_path, table);
  return 0;
}

struct EstimateOpts {
  CommonOpts common;
  std::string panel_path;
  int groups = 2;
  int restarts = 50;
  int max_iter = 200;
  double tol = 1e-10;
  bool time_constant = false;
  bool fixed_effects = false;
  std::string out_coef = "coefficients.csv";
  std::string out_assign = "assignment.csv";
};

int run_estimate(const EstimateOpts& o) {
  PanelDataset panel = load_panel(o.panel_path);
  PanelDataset work = o.fixed_effects ? fe_transform(panel) : panel;
  EstimatorConfig est;
  est.n_groups = o.groups;
  est.restarts = o.restarts;
  est.max_iter = o.max_iter;
  est.tol = o.tol;
  est.seed = o.common.seed;
  est.time_constant = o.time_constant;
  est.threads = thread_count(o.common.threads);
  GroupModel model = fit_grouped(work, est);
  save_coefficients(o.out_coef, model);
  save_assignment(o.out_assign, panel, model);
  return 0;
}

struct CritvalOpts {
  CommonOpts common;
  std::string method = "sns";
  int n_eff = 1;
  int groups = 2;
  double dof = 0.0;
  std::string omega_path;
  bool gaussian_limit = false;
};

int run_critval(const CritvalOpts& o) {
  CriticalValueRequest req;
  req.method = method_from_string(o.method);
  req.alpha = o.common.alpha;
  req.n_eff = o.n_eff;
  req.groups = o.groups;
  req.dof = o.dof;
  req.gaussian_limit = o.gaussian_limit;
  if (!o.omega_path.empty())
    req.omega = load_matrix(o.omega_path);
  else if (req.method != Method::SNS)
    req.omega = Eigen::MatrixXd::Identity(o.groups - 1, o.groups - 1);
  if (!o.gaussian_limit && !(o.dof > 0.0))
    throw DomainError("--dof is required without --limit");
  std::printf("%.12g\n", critical_value(req, make_qmc(o.common)));
  return 0;
}

bool numerical_failure(const Error& e) {
  return dynamic_cast<const DegenerateMoment*>(&e) != nullptr ||
         dynamic_cast<const SingularOmega*>(&e) != nullptr ||
         dynamic_cast<const BracketFailure*>(&e) != nullptr ||
         dynamic_cast<const CholeskyFailure*>(&e) != nullptr ||
         dynamic_cast<const SingularMatrix*>(&e) != nullptr ||
         dynamic_cast<const BelowPointMass*>(&e) != nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence sets for latent group memberships in grouped panel models"};
  app.set_config("--config", "", "flat key=value configuration file");
  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "print the resolved configuration and exit");
  app.require_subcommand(0, 1);

  AnalyzeOpts an;
  auto* analyze = app.add_subcommand("analyze", "confidence sets for a panel CSV");
  analyze->add_option("--panel", an.panel_path, "panel CSV (unit,time,y,x1..xK)")
      ->required();
  auto* model_src = analyze->add_option_group("model", "coefficients source");
  model_src->add_option("--coef", an.coef_path, "coefficients CSV (group,time,k,value)");
  model_src->add_option("--groups", an.groups, "estimate this many groups");
  model_src->require_option(1);
  analyze->add_option("--out", an.out_path, "report path")->capture_default_str();
  analyze->add_flag("--fixed-effects", an.fixed_effects,
                    "within-demean each unit before inference");
  analyze->add_flag("--jackknife", an.jackknife,
                    "half-panel jackknife bias correction (requires --fixed-effects)");
  analyze->add_flag("--time-constant", an.time_constant,
                    "estimate time-constant coefficients");
  analyze->add_option("--restarts", an.restarts, "estimator restarts")
      ->capture_default_str();
  analyze->add_option("--max-iter", an.max_iter, "estimator iteration cap")
      ->capture_default_str();
  analyze->add_option("--tol", an.tol, "estimator objective tolerance")
      ->capture_default_str();
  add_common(analyze, an.common);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study");
  simulate->add_option("--design", sim.design, "a, b, or het")->required();
  simulate->add_option("--n", sim.n_units, "units per panel")->capture_default_str();
  simulate->add_option("--t", sim.n_periods, "time periods")->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "noise scale")->capture_default_str();
  simulate->add_option("--g0", sim.g0, "true group for designs a and b")
      ->capture_default_str();
  simulate->add_option("--high-noise-prob", sim.high_noise_prob,
                       "high-noise probability for design het")
      ->capture_default_str();
  simulate->add_option("--reps", sim.reps, "replications")->capture_default_str();
  simulate->add_flag("--limit", sim.gaussian_limit,
                     "critical values from the Gaussian limit");
  simulate->add_option("--out", sim.out_path, "coverage CSV path")
      ->capture_default_str();
  add_common(simulate, sim.common);

  EstimateOpts est;
  auto* estimate = app.add_subcommand("estimate", "kmeans-type grouped estimation");
  estimate->add_option("--panel", est.panel_path, "panel CSV")->required();
  estimate->add_option("--groups", est.groups, "number of groups")->required();
  estimate->add_option("--restarts", est.restarts, "random restarts")
      ->capture_default_str();
  estimate->add_option("--max-iter", est.max_iter, "iteration cap")
      ->capture_default_str();
  estimate->add_option("--tol", est.tol, "objective tolerance")->capture_default_str();
  estimate->add_flag("--time-constant", est.time_constant,
                     "time-constant coefficients");
  estimate->add_flag("--fixed-effects", est.fixed_effects,
                     "within-demean each unit before estimation");
  estimate->add_option("--out-coef", est.out_coef, "coefficients CSV path")
      ->capture_default_str();
  estimate->add_option("--out-assign", est.out_assign, "assignment CSV path")
      ->capture_default_str();
  add_common(estimate, est.common, false);

  CritvalOpts cv;
  auto* critval = app.add_subcommand("critval", "print one critical value");
  critval->add_option("--method", cv.method, "sns, max, or qlr")->required();
  critval->add_option("--alpha", cv.common.alpha, "test level")->capture_default_str();
  critval->add_option("--n", cv.n_eff, "Bonferroni count")->required();
  critval->add_option("--groups", cv.groups, "number of groups")->capture_default_str();
  critval->add_option("--dof", cv.dof, "degrees of freedom (T-1)");
  critval->add_option("--omega", cv.omega_path, "correlation matrix CSV");
  critval->add_flag("--limit", cv.gaussian_limit, "Gaussian-limit critical value");
  critval->add_option("--qmc-points", cv.common.qmc_points, "lattice points")
      ->capture_default_str();
  critval->add_option("--qmc-randomizations", cv.common.qmc_randomizations,
                      "random shifts")
      ->capture_default_str();
  critval->add_option("--seed", cv.common.seed, "QMC seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (print_config) {
    std::cout << app.config_to_str(true, false);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 2;
  }
  if (an.jackknife && !an.fixed_effects) {
    std::cerr << "error: --jackknife requires --fixed-effects\n";
    return 2;
  }

  try {
    if (analyze->parsed()) return run_analyze(an);
    if (simulate->parsed()) return run_simulate(sim);
    if (estimate->parsed()) return run_estimate(est);
    if (critval->parsed()) return run_critval(cv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numerical_failure(e) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
