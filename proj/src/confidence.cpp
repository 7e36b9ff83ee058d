#include "pcs/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcs/chibar.hpp"
#include "pcs/errors.hpp"
#include "pcs/mvprob.hpp"
#include "pcs/special.hpp"
#include "pcs/teststats.hpp"
#include "pcs/threads.hpp"

namespace pcs {

bool JointConfidenceSet::covers(const std::vector<int>& assignment) const {
  if (assignment.size() != per_unit.size())
    throw DimensionMismatch("covers: assignment size must match per_unit");
  for (std::size_t i = 0; i < per_unit.size(); ++i) {
    const auto& g = per_unit[i].groups;
    if (!std::binary_search(g.begin(), g.end(), assignment[i])) return false;
  }
  return true;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must be in (0,1)");
}

void require_assignment(const GroupModel& model, const PanelDataset& panel) {
  if (static_cast<int>(model.assignment.size()) != panel.n_units)
    throw DimensionMismatch("model must carry an assignment for every unit");
}

MomentBlock build_block(const PanelDataset& panel, const GroupModel& model, int i,
                        int g, const InferenceOptions& opts) {
  return opts.jackknife ? fe_jackknife_block(panel, model, i, g, opts.epsilon)
                        : moment_block(panel, model, i, g, opts.epsilon);
}

// CDF of the method's statistic under the block's reference distribution.
// Membership at per-unit level lvl then reduces to one comparison:
// SNS cdf <= 1 - lvl/(G-1), MAX/QLR cdf <= 1 - lvl. A QLR statistic of zero
// is stored as 0 so it is always included (the quantile at or below the
// point mass is zero).
double statistic_cdf(Method method, const MomentBlock& b, bool gaussian_limit,
                     const QmcConfig& qmc) {
  const double T = static_cast<double>(b.d_hat.cols());
  const double dof = T - 1.0;
  switch (method) {
    case Method::SNS: {
      const double s = max_statistic(b);
      return gaussian_limit ? norm_cdf(s) : t_cdf(std::sqrt(dof / T) * s, dof);
    }
    case Method::MAX: {
      const double s = max_statistic(b);
      return gaussian_limit ? mvn_max_cdf(s, b.omega, qmc)
                            : mvt_max_cdf(std::sqrt(dof / T) * s, b.omega, dof, qmc);
    }
    case Method::QLR: {
      const double v = qlr_statistic(b).value;
      if (v == 0.0) return 0.0;
      return fqlr_cdf(v, b.omega, dof, gaussian_limit, qmc);
    }
  }
  throw DomainError("statistic_cdf: unknown method");
}

bool member_at(Method method, double cdf, double lvl, int n_alts) {
  const double target = method == Method::SNS ? 1.0 - lvl / n_alts : 1.0 - lvl;
  return cdf <= target;
}

// per-(unit, group) statistic CDFs, computed once and reused across levels
Eigen::MatrixXd cdf_table(const PanelDataset& panel, const GroupModel& model,
                          Method method, const QmcConfig& qmc,
                          const InferenceOptions& opts) {
  const int n = panel.n_units;
  const int G = model.n_groups;
  Eigen::MatrixXd cdf(n, G);
  parallel_for(n, opts.threads, [&](std::size_t iu) {
    const int i = static_cast<int>(iu);
    for (int g = 0; g < G; ++g) {
      auto block = build_block(panel, model, i, g, opts);
      cdf(i, g) = statistic_cdf(method, block, opts.gaussian_limit, qmc);
    }
  });
  return cdf;
}

UnitConfidenceSet set_from_row(const Eigen::MatrixXd& cdf, int i, int ghat,
                               Method method, double lvl) {
  const int G = static_cast<int>(cdf.cols());
  UnitConfidenceSet s;
  s.unit = i;
  s.method = method;
  s.alpha_level = lvl;
  for (int g = 0; g < G; ++g)
    if (g == ghat || member_at(method, cdf(i, g), lvl, G - 1)) s.groups.push_back(g);
  return s;
}

}  // namespace

UnitConfidenceSet unit_cs(const PanelDataset& panel, const GroupModel& model, int i,
                          double alpha, Method method, const QmcConfig& qmc,
                          const InferenceOptions& opts) {
  check_alpha(alpha);
  validate_model(panel, model);
  require_assignment(model, panel);
  if (i < 0 || i >= panel.n_units) throw DimensionMismatch("unit_cs: unit out of range");
  const int G = model.n_groups;
  UnitConfidenceSet s;
  s.unit = i;
  s.method = method;
  s.alpha_level = alpha;
  for (int g = 0; g < G; ++g) {
    auto block = build_block(panel, model, i, g, opts);
    double cdf = statistic_cdf(method, block, opts.gaussian_limit, qmc);
    if (g == model.assignment[i] || member_at(method, cdf, alpha, G - 1))
      s.groups.push_back(g);
  }
  return s;
}

JointConfidenceSet joint_cs(const PanelDataset& panel, const GroupModel& model,
                            double alpha, Method method, const QmcConfig& qmc,
                            const InferenceOptions& opts) {
  check_alpha(alpha);
  validate_model(panel, model);
  require_assignment(model, panel);
  const int n = panel.n_units;
  Eigen::MatrixXd cdf = cdf_table(panel, model, method, qmc, opts);
  JointConfidenceSet joint;
  joint.method = method;
  joint.alpha = alpha;
  joint.beta = 0.0;
  joint.n_selected = n;
  const double lvl = alpha / n;
  for (int i = 0; i < n; ++i)
    joint.per_unit.push_back(set_from_row(cdf, i, model.assignment[i], method, lvl));
  return joint;
}

JointConfidenceSet unit_selection_cs(const PanelDataset& panel, const GroupModel& model,
                                     double alpha, double beta, Method method,
                                     const QmcConfig& qmc, const InferenceOptions& opts) {
  check_alpha(alpha);
  if (!(beta >= 0.0 && beta < alpha / 3.0))
    throw InvalidBeta("unit_selection_cs: beta must satisfy 0 <= beta < alpha/3");
  validate_model(panel, model);
  require_assignment(model, panel);
  const int n = panel.n_units;
  const int G = model.n_groups;

  // unadjusted statistics must live on the same panel the assignment
  // minimizes over; under the jackknife that is the within-demeaned one
  PanelDataset fe_panel;
  if (opts.jackknife) fe_panel = fe_transform(panel);
  const PanelDataset& upanel = opts.jackknife ? fe_panel : panel;

  // selected(i,g) = 1{M-hat_i(g) nonempty}; with beta = 0 the threshold is
  // -infinity and every M-hat is nonempty
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> selected(n, G);
  selected.setConstant(true);
  std::vector<Eigen::VectorXd> d_hat_u(n);
  parallel_for(n, opts.threads, [&](std::size_t iu) {
    const int i = static_cast<int>(iu);
    auto ub = unadjusted_block(upanel, model, i, model.assignment[i]);
    d_hat_u[i] = ub.D_hat_u;
  });
  for (int i = 0; i < n; ++i)
    if (d_hat_u[i].maxCoeff() > 1e-10)
      throw AssignmentViolation("unit " + panel.unit_labels[i] +
                                ": assignment does not minimize the least-squares "
                                "criterion (D-hat-U > 0)");
  if (beta > 0.0) {
    CriticalValueRequest req;
    req.method = Method::SNS;
    req.alpha = beta;
    req.n_eff = n;
    req.groups = G;
    req.dof = static_cast<double>(panel.n_periods - 1);
    req.gaussian_limit = opts.gaussian_limit;
    const double threshold = -2.0 * critical_value(req, qmc);
    parallel_for(n, opts.threads, [&](std::size_t iu) {
      const int i = static_cast<int>(iu);
      for (int g = 0; g < G; ++g) {
        if (g == model.assignment[i]) {
          // D-hat-U(ghat, h) <= 0 <= -threshold never clears the cut on its
          // own, but some h with D-hat-U(g, ghat) > threshold always exists
          // for g != ghat; compute honestly anyway
          selected(i, g) = (d_hat_u[i].array() > threshold).any();
          continue;
        }
        auto ub = unadjusted_block(upanel, model, i, g);
        selected(i, g) = (ub.D_hat_u.array() > threshold).any();
      }
    });
  }

  Eigen::MatrixXd cdf = cdf_table(panel, model, method, qmc, opts);

  std::vector<std::vector<int>> H(n);
  for (int i = 0; i < n; ++i) {
    H[i].resize(G);
    for (int g = 0; g < G; ++g) H[i][g] = g;
  }
  JointConfidenceSet joint;
  joint.method = method;
  joint.alpha = alpha;
  joint.beta = beta;

  int n_hat = 0;
  double lvl = 0.0;
  for (int s = 0;; ++s) {
    n_hat = 0;
    for (int i = 0; i < n; ++i) {
      bool any = false;
      for (int g : H[i]) any = any || selected(i, g);
      n_hat += any ? 1 : 0;
    }
    joint.iterations.push_back({s, n_hat});
    lvl = (alpha - 2.0 * beta) / std::max(n_hat, 1);
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      auto next = set_from_row(cdf, i, model.assignment[i], method, lvl).groups;
      if (next != H[i]) {
        changed = true;
        H[i] = std::move(next);
      }
    }
    if (!changed || s > n * G + 1) break;
  }

  joint.n_selected = n_hat;
  for (int i = 0; i < n; ++i) {
    UnitConfidenceSet u;
    u.unit = i;
    u.method = method;
    u.alpha_level = lvl;
    u.groups = H[i];
    joint.per_unit.push_back(std::move(u));
  }
  return joint;
}

PValueReport pvalues(const PanelDataset& panel, const GroupModel& model, Method method,
                     int n_selected, const QmcConfig& qmc, const InferenceOptions& opts) {
  validate_model(panel, model);
  require_assignment(model, panel);
  if (n_selected < 1) throw DomainError("pvalues: n_selected must be >= 1");
  const int n = panel.n_units;
  const int G = model.n_groups;
  Eigen::MatrixXd cdf = cdf_table(panel, model, method, qmc, opts);
  PValueReport report;
  report.method = method;
  report.n_selected = n_selected;
  for (int i = 0; i < n; ++i) {
    const int ghat = model.assignment[i];
    double worst = 0.0;
    for (int g = 0; g < G; ++g) {
      if (g == ghat) continue;
      double c = cdf(i, g);
      if (method == Method::QLR && c == 0.0) {
        // recover the genuine point-mass CDF value for the p-value
        auto block = build_block(panel, model, i, g, opts);
        c = fqlr_cdf(0.0, block.omega, static_cast<double>(panel.n_periods - 1),
                     opts.gaussian_limit, qmc);
      }
      worst = std::max(worst, 1.0 - c);
    }
    PValueEntry e;
    e.unit = i;
    e.ghat = ghat;
    e.unitwise_p = method == Method::SNS ? (G - 1) * worst : worst;
    e.joint_p = n_selected * e.unitwise_p;
    report.per_unit.push_back(e);
  }
  return report;
}

std::vector<int> jointly_significant(const PValueReport& report, double alpha) {
  std::vector<int> units;
  for (const auto& e : report.per_unit)
    if (e.joint_p < alpha) units.push_back(e.unit);
  return units;
}

MissBounds bonferroni_miss_bounds(double alpha, int n) {
  check_alpha(alpha);
  if (n < 1) throw DomainError("bonferroni_miss_bounds: n must be >= 1");
  MissBounds b;
  const double rate = alpha / n;
  b.exact = -std::expm1(n * std::log1p(-rate));
  b.lower = alpha - alpha * alpha / 2.0;
  const double inv = 1.0 / ((1.0 - rate) * (1.0 - rate));
  b.upper = alpha - (alpha * alpha / 2.0) * (1.0 - alpha / 3.0 - inv / n);
  return b;
}

}  // namespace pcs
