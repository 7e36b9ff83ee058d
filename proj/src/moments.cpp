#include "pcs/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcs/errors.hpp"

namespace pcs {

namespace {

constexpr double kDegeneracyTol = 1e-12;
constexpr int kMaxAlternatives = 16;

void check_block_args(const PanelDataset& panel, const GroupModel& model, int i, int g) {
  if (i < 0 || i >= panel.n_units)
    throw DimensionMismatch("moment block: unit index out of range");
  if (g < 0 || g >= model.n_groups)
    throw DimensionMismatch("moment block: group index out of range");
  if (model.n_groups - 1 > kMaxAlternatives)
    throw DimensionMismatch("moment block: more than " +
                            std::to_string(kMaxAlternatives) + " alternative groups");
}

std::vector<int> alternatives(int n_groups, int g) {
  std::vector<int> alts;
  alts.reserve(n_groups - 1);
  for (int h = 0; h < n_groups; ++h)
    if (h != g) alts.push_back(h);
  return alts;
}

// y_i - rowwise dot of x_i and beta
Eigen::VectorXd residual_series(const PanelDataset& panel, int i,
                                const Eigen::MatrixXd& beta) {
  return panel.outcomes.row(i).transpose() -
         (panel.covariates[i].array() * beta.array()).rowwise().sum().matrix();
}

// Fills d_bar, s_hat, D_hat, omega_star, omega from d_hat, numerator, epsilon.
void studentize(MomentBlock& b) {
  const int p = static_cast<int>(b.d_hat.rows());
  const int T = static_cast<int>(b.d_hat.cols());
  b.d_bar = b.d_hat.rowwise().mean();
  Eigen::MatrixXd centered = b.d_hat.colwise() - b.d_bar;
  b.s_hat = centered.rowwise().norm();
  const double scale = kDegeneracyTol * T * b.d_hat.cwiseAbs().maxCoeff();
  for (int j = 0; j < p; ++j)
    if (b.s_hat(j) <= scale)
      throw DegenerateMoment("unit " + std::to_string(b.unit + 1) + ", groups " +
                             std::to_string(b.hypothesis + 1) + " vs " +
                             std::to_string(b.alt_groups[j] + 1) +
                             ": d_hat series has zero variance");
  b.D_hat = b.numerator.cwiseQuotient(b.s_hat);
  b.omega_star = Eigen::MatrixXd::Identity(p, p);
  for (int j = 0; j < p; ++j)
    for (int l = j + 1; l < p; ++l) {
      double r = centered.row(j).dot(centered.row(l)) / (b.s_hat(j) * b.s_hat(l));
      r = std::clamp(r, -1.0, 1.0);
      b.omega_star(j, l) = b.omega_star(l, j) = r;
    }
  const double det = b.omega_star.determinant();
  b.omega = b.omega_star;
  if (det < b.epsilon) b.omega.diagonal().array() += b.epsilon - det;
}

}  // namespace

MomentBlock moment_block(const PanelDataset& panel, const GroupModel& model, int i,
                         int g, double epsilon) {
  check_block_args(panel, model, i, g);
  MomentBlock b;
  b.unit = i;
  b.hypothesis = g;
  b.alt_groups = alternatives(model.n_groups, g);
  b.epsilon = epsilon;
  const int p = static_cast<int>(b.alt_groups.size());
  const int T = panel.n_periods;
  Eigen::VectorXd r_g = residual_series(panel, i, model.coefficients[g]);
  b.d_hat.resize(p, T);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd r_h = residual_series(panel, i, model.coefficients[b.alt_groups[j]]);
    Eigen::ArrayXd delta = (r_h - r_g).array();  // x'(beta_g - beta_h)
    b.d_hat.row(j) =
        0.5 * (r_g.array().square() - r_h.array().square() + delta.square());
  }
  b.numerator = b.d_hat.rowwise().sum();
  studentize(b);
  return b;
}

UnadjustedBlock unadjusted_block(const PanelDataset& panel, const GroupModel& model,
                                 int i, int g) {
  check_block_args(panel, model, i, g);
  UnadjustedBlock b;
  b.unit = i;
  b.hypothesis = g;
  b.alt_groups = alternatives(model.n_groups, g);
  const int p = static_cast<int>(b.alt_groups.size());
  const int T = panel.n_periods;
  Eigen::VectorXd r_g = residual_series(panel, i, model.coefficients[g]);
  Eigen::MatrixXd d(p, T);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd r_h = residual_series(panel, i, model.coefficients[b.alt_groups[j]]);
    d.row(j) = r_g.array().square() - r_h.array().square();
  }
  Eigen::VectorXd d_bar = d.rowwise().mean();
  Eigen::MatrixXd centered = d.colwise() - d_bar;
  Eigen::VectorXd s = centered.rowwise().norm();
  const double scale = kDegeneracyTol * T * d.cwiseAbs().maxCoeff();
  for (int j = 0; j < p; ++j)
    if (s(j) <= scale)
      throw DegenerateMoment("unit " + std::to_string(i + 1) + ", groups " +
                             std::to_string(g + 1) + " vs " +
                             std::to_string(b.alt_groups[j] + 1) +
                             ": unadjusted series has zero variance");
  b.D_hat_u = d.rowwise().sum().cwiseQuotient(s);
  return b;
}

PanelDataset fe_transform(const PanelDataset& panel) {
  validate_panel(panel);
  PanelDataset out = panel;
  for (int i = 0; i < panel.n_units; ++i) {
    out.outcomes.row(i).array() -= panel.outcomes.row(i).mean();
    out.covariates[i].rowwise() -= panel.covariates[i].colwise().mean();
  }
  return out;
}

namespace {

// d_hat series for one (g,h) pair with y and x demeaned by half (split at
// t0), keeping the full-sample covariate mean in the recentering term.
Eigen::ArrayXd half_split_series(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& beta_g,
                                 const Eigen::MatrixXd& beta_h,
                                 const Eigen::RowVectorXd& xbar_full, int t0) {
  const int T = static_cast<int>(y.size());
  Eigen::ArrayXd d(T);
  const double ybar1 = y.head(t0).mean();
  const double ybar2 = y.tail(T - t0).mean();
  const Eigen::RowVectorXd xbar1 = x.topRows(t0).colwise().mean();
  const Eigen::RowVectorXd xbar2 = x.bottomRows(T - t0).colwise().mean();
  for (int t = 0; t < T; ++t) {
    const bool first = t < t0;
    const double yd = y(t) - (first ? ybar1 : ybar2);
    const Eigen::RowVectorXd xd = x.row(t) - (first ? xbar1 : xbar2);
    const double rg = yd - xd.dot(beta_g.row(t));
    const double rh = yd - xd.dot(beta_h.row(t));
    const double recenter = (x.row(t) - xbar_full).dot(beta_g.row(t) - beta_h.row(t));
    d(t) = 0.5 * (rg * rg - rh * rh + recenter * recenter);
  }
  return d;
}

}  // namespace

MomentBlock fe_jackknife_block(const PanelDataset& panel, const GroupModel& model,
                               int i, int g, double epsilon) {
  check_block_args(panel, model, i, g);
  const int T = panel.n_periods;
  if (T < 4) throw DimensionMismatch("fe_jackknife_block: requires T >= 4");

  MomentBlock b;
  b.unit = i;
  b.hypothesis = g;
  b.alt_groups = alternatives(model.n_groups, g);
  b.epsilon = epsilon;
  const int p = static_cast<int>(b.alt_groups.size());

  const Eigen::VectorXd y = panel.outcomes.row(i).transpose();
  const Eigen::MatrixXd& x = panel.covariates[i];
  const double ybar = y.mean();
  const Eigen::RowVectorXd xbar = x.colwise().mean();
  const Eigen::VectorXd y_fe = y.array() - ybar;
  const Eigen::MatrixXd x_fe = x.rowwise() - xbar;

  const int t_lo = T / 2;
  const int t_hi = (T + 1) / 2;

  b.d_hat.resize(p, T);
  b.numerator.resize(p);
  for (int j = 0; j < p; ++j) {
    const Eigen::MatrixXd& beta_g = model.coefficients[g];
    const Eigen::MatrixXd& beta_h = model.coefficients[b.alt_groups[j]];
    Eigen::ArrayXd d_fe(T);
    for (int t = 0; t < T; ++t) {
      const double rg = y_fe(t) - x_fe.row(t).dot(beta_g.row(t));
      const double rh = y_fe(t) - x_fe.row(t).dot(beta_h.row(t));
      const double recenter = x_fe.row(t).dot(beta_g.row(t) - beta_h.row(t));
      d_fe(t) = 0.5 * (rg * rg - rh * rh + recenter * recenter);
    }
    Eigen::ArrayXd d_12 = half_split_series(y, x, beta_g, beta_h, xbar, t_lo);
    if (t_hi != t_lo) {
      d_12 += half_split_series(y, x, beta_g, beta_h, xbar, t_hi);
      d_12 *= 0.5;
    }
    b.d_hat.row(j) = d_fe;
    b.numerator(j) = 2.0 * d_fe.sum() - d_12.sum();
  }
  studentize(b);
  return b;
}

}  // namespace pcs
