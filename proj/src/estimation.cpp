#include "pcs/estimation.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "pcs/errors.hpp"
#include "pcs/rng.hpp"
#include "pcs/threads.hpp"

namespace pcs {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr int kMaxInitDraws = 10000;
constexpr int kMaxRunRestarts = 100;

double unit_sse(const PanelDataset& panel, const Eigen::MatrixXd& beta, int i) {
  return (panel.outcomes.row(i).transpose() -
          panel.covariates[i].cwiseProduct(beta).rowwise().sum())
      .squaredNorm();
}

Eigen::VectorXd solve_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const auto& R = qr.matrixR();
  for (int j = 0; j < X.cols(); ++j)
    if (j >= R.rows() || std::abs(R(j, j)) < kPivotTol)
      throw RankDeficient("design matrix pivot below 1e-10 in group regression");
  return qr.solve(y);
}

// least-squares update of all group coefficients for a fixed assignment
std::vector<Eigen::MatrixXd> update_coefficients(const PanelDataset& panel,
                                                 const std::vector<int>& assignment,
                                                 int n_groups, bool time_constant) {
  const int T = panel.n_periods;
  const int K = panel.covariate_dim;
  std::vector<std::vector<int>> members(n_groups);
  for (std::size_t i = 0; i < assignment.size(); ++i)
    members[assignment[i]].push_back(static_cast<int>(i));
  for (int g = 0; g < n_groups; ++g)
    if (members[g].empty()) throw EmptyGroup("group lost all members");

  std::vector<Eigen::MatrixXd> coef(n_groups);
  for (int g = 0; g < n_groups; ++g) {
    const auto& idx = members[g];
    const int m = static_cast<int>(idx.size());
    coef[g].resize(T, K);
    if (time_constant) {
      Eigen::MatrixXd X(m * T, K);
      Eigen::VectorXd y(m * T);
      for (int r = 0; r < m; ++r) {
        X.middleRows(r * T, T) = panel.covariates[idx[r]];
        y.segment(r * T, T) = panel.outcomes.row(idx[r]).transpose();
      }
      coef[g] = solve_ls(X, y).transpose().replicate(T, 1);
    } else {
      for (int t = 0; t < T; ++t) {
        Eigen::MatrixXd X(m, K);
        Eigen::VectorXd y(m);
        for (int r = 0; r < m; ++r) {
          X.row(r) = panel.covariates[idx[r]].row(t);
          y(r) = panel.outcomes(idx[r], t);
        }
        coef[g].row(t) = solve_ls(X, y).transpose();
      }
    }
  }
  return coef;
}

std::vector<int> argmin_assignment(const PanelDataset& panel,
                                   const std::vector<Eigen::MatrixXd>& coef) {
  std::vector<int> assignment(panel.n_units);
  for (int i = 0; i < panel.n_units; ++i) {
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < coef.size(); ++g) {
      const double sse = unit_sse(panel, coef[g], i);
      if (sse < best_sse) {
        best_sse = sse;
        best = static_cast<int>(g);
      }
    }
    assignment[i] = best;
  }
  return assignment;
}

struct RunResult {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> coefficients;
  std::vector<int> assignment;
};

std::vector<int> random_assignment(SplitMix64& rng, int n, int groups) {
  std::vector<int> a(n);
  for (int attempt = 0; attempt < kMaxInitDraws; ++attempt) {
    std::vector<char> seen(groups, 0);
    for (int i = 0; i < n; ++i) {
      int g = static_cast<int>(rng.uniform01() * groups);
      if (g >= groups) g = groups - 1;
      a[i] = g;
      seen[g] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) == seen.end()) return a;
  }
  throw EmptyGroup("could not draw an initial assignment covering every group");
}

RunResult single_run(const PanelDataset& panel, const EstimatorConfig& config,
                     std::uint64_t run_seed) {
  SplitMix64 rng(run_seed);
  for (int attempt = 0; attempt < kMaxRunRestarts; ++attempt) {
    std::vector<int> assignment =
        random_assignment(rng, panel.n_units, config.n_groups);
    try {
      RunResult out;
      double prev = std::numeric_limits<double>::infinity();
      for (int it = 0; it < config.max_iter; ++it) {
        out.coefficients = update_coefficients(panel, assignment, config.n_groups,
                                               config.time_constant);
        std::vector<int> next = argmin_assignment(panel, out.coefficients);
        bool has_empty = false;
        std::vector<char> seen(config.n_groups, 0);
        for (int g : next) seen[g] = 1;
        for (char s : seen) has_empty = has_empty || !s;
        if (has_empty) throw EmptyGroup("group lost all members");
        assignment = next;
        double obj = 0.0;
        for (int i = 0; i < panel.n_units; ++i)
          obj += unit_sse(panel, out.coefficients[assignment[i]], i);
        obj /= static_cast<double>(panel.n_units) * panel.n_periods;
        out.objective = obj;
        if (prev - obj <= config.tol) break;
        prev = obj;
      }
      out.assignment = std::move(assignment);
      return out;
    } catch (const EmptyGroup&) {
      continue;
    }
  }
  throw EmptyGroup("estimation run kept collapsing a group");
}

void canonicalize(RunResult& run) {
  const int G = static_cast<int>(run.coefficients.size());
  std::vector<int> order(G);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return run.coefficients[a](0, 0) < run.coefficients[b](0, 0);
  });
  std::vector<int> relabel(G);
  std::vector<Eigen::MatrixXd> coef(G);
  for (int g = 0; g < G; ++g) {
    coef[g] = run.coefficients[order[g]];
    relabel[order[g]] = g;
  }
  run.coefficients = std::move(coef);
  for (int& g : run.assignment) g = relabel[g];
}

}  // namespace

double group_objective(const PanelDataset& panel, const GroupModel& model) {
  validate_model(panel, model);
  if (model.assignment.empty())
    throw DimensionMismatch("group_objective requires an assignment");
  double total = 0.0;
  for (int i = 0; i < panel.n_units; ++i)
    total += unit_sse(panel, model.coefficients[model.assignment[i]], i);
  return total / (static_cast<double>(panel.n_units) * panel.n_periods);
}

GroupModel assign_groups(const PanelDataset& panel, const GroupModel& model) {
  GroupModel out = model;
  out.assignment.clear();
  validate_model(panel, out);
  out.assignment = argmin_assignment(panel, model.coefficients);
  return out;
}

GroupModel fit_grouped(const PanelDataset& panel, const EstimatorConfig& config) {
  validate_panel(panel);
  if (config.n_groups < 2)
    throw DimensionMismatch("fit_grouped requires at least two groups");
  if (config.n_groups > panel.n_units)
    throw DimensionMismatch("more groups than units");
  if (config.restarts < 1) throw DomainError("restarts must be at least 1");
  if (config.max_iter < 1) throw DomainError("max_iter must be at least 1");
  if (!(config.tol >= 0.0)) throw DomainError("tol must be nonnegative");

  std::vector<RunResult> slots(config.restarts);
  std::vector<std::exception_ptr> failures(config.restarts);
  parallel_for(static_cast<std::size_t>(config.restarts), config.threads,
               [&](std::size_t r) {
                 try {
                   slots[r] = single_run(panel, config,
                                         mix_seed(config.seed, 0x6b1a5 + r));
                 } catch (...) {
                   failures[r] = std::current_exception();
                 }
               });
  int best = -1;
  for (int r = 0; r < config.restarts; ++r) {
    if (failures[r]) std::rethrow_exception(failures[r]);
    if (best < 0 || slots[r].objective < slots[best].objective) best = r;
  }
  canonicalize(slots[best]);

  GroupModel model;
  model.n_groups = config.n_groups;
  model.time_constant = config.time_constant;
  model.coefficients = std::move(slots[best].coefficients);
  model.assignment = std::move(slots[best].assignment);
  return model;
}

}  // namespace pcs
