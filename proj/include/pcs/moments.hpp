#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pcs/core.hpp"

namespace pcs {

// Moment inequalities for one (unit, hypothesized group) pair. Row j of d_hat
// is the recentered difference series against alt_groups[j]; D_hat is the
// studentized vector and omega the regularized correlation matrix used by the
// MAX and QLR procedures.
struct MomentBlock {
  int unit = 0;
  int hypothesis = 0;           // 0-based g
  std::vector<int> alt_groups;  // ascending, 0-based, excludes hypothesis
  Eigen::MatrixXd d_hat;        // (G-1) x T
  Eigen::VectorXd d_bar;        // per-row time means
  Eigen::VectorXd s_hat;        // sqrt(sum_t (d_hat - d_bar)^2)
  Eigen::VectorXd numerator;    // time sums (bias-corrected for the jackknife)
  Eigen::VectorXd D_hat;        // numerator / s_hat
  Eigen::MatrixXd omega_star;
  Eigen::MatrixXd omega;        // omega_star + max(eps - det, 0) I
  double epsilon = 0.0;
};

// Unadjusted statistic for unit selection: squared-residual differences
// without the recentering term, studentized the same way.
struct UnadjustedBlock {
  int unit = 0;
  int hypothesis = 0;
  std::vector<int> alt_groups;
  Eigen::VectorXd D_hat_u;
};

// d_hat_it(g,h) = ((y - x'b_g)^2 - (y - x'b_h)^2 + (x'(b_g - b_h))^2) / 2.
// Caller is responsible for validate_model; only index ranges are checked.
// Throws DegenerateMoment when a d_hat row has (numerically) zero variance.
MomentBlock moment_block(const PanelDataset& panel, const GroupModel& model, int i,
                         int g, double epsilon);

// d_hat_u_it(g,h) = (y - x'b_g)^2 - (y - x'b_h)^2.
UnadjustedBlock unadjusted_block(const PanelDataset& panel, const GroupModel& model,
                                 int i, int g);

// Within-unit demeaning of outcomes and covariates.
PanelDataset fe_transform(const PanelDataset& panel);

// Half-panel jackknife block: the d_hat series and denominator come from the
// within-demeaned panel, the numerator is 2*sum(d_fe) - sum(d_fe_halves)
// where the half series demean y and x within halves of sizes floor(T/2) and
// ceil(T/2) (both split variants averaged) while the recentering term keeps
// the full-sample covariate mean. Requires T >= 4.
MomentBlock fe_jackknife_block(const PanelDataset& panel, const GroupModel& model,
                               int i, int g, double epsilon);

}  // namespace pcs
