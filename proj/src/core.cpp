#include "pcs/core.hpp"

#include <cmath>
#include <string>

namespace pcs {

void validate_panel(const PanelDataset& panel) {
  const int n = panel.n_units;
  const int t = panel.n_periods;
  const int k = panel.covariate_dim;
  if (n < 1) throw DimensionMismatch("panel: n_units must be >= 1");
  if (t < 2) throw DimensionMismatch("panel: n_periods must be >= 2");
  if (k < 1) throw DimensionMismatch("panel: covariate_dim must be >= 1");
  if (panel.outcomes.rows() != n || panel.outcomes.cols() != t)
    throw DimensionMismatch("panel: outcomes must be n_units x n_periods");
  if (static_cast<int>(panel.covariates.size()) != n)
    throw DimensionMismatch("panel: one covariate matrix per unit required");
  for (int i = 0; i < n; ++i) {
    if (panel.covariates[i].rows() != t || panel.covariates[i].cols() != k)
      throw DimensionMismatch("panel: covariates[" + std::to_string(i) +
                              "] must be n_periods x covariate_dim");
    if (!panel.covariates[i].allFinite())
      throw NonFinite("panel: non-finite covariate for unit " + std::to_string(i));
  }
  if (!panel.outcomes.allFinite()) throw NonFinite("panel: non-finite outcome");
  if (static_cast<int>(panel.unit_labels.size()) != n)
    throw DimensionMismatch("panel: unit_labels size mismatch");
  if (static_cast<int>(panel.time_labels.size()) != t)
    throw DimensionMismatch("panel: time_labels size mismatch");
}

void validate_model(const PanelDataset& panel, const GroupModel& model) {
  const int g = model.n_groups;
  if (g < 2) throw DimensionMismatch("model: n_groups must be >= 2");
  if (static_cast<int>(model.coefficients.size()) != g)
    throw DimensionMismatch("model: one coefficient matrix per group required");
  for (int a = 0; a < g; ++a) {
    const auto& beta = model.coefficients[a];
    if (beta.rows() != panel.n_periods || beta.cols() != panel.covariate_dim)
      throw DimensionMismatch("model: coefficients[" + std::to_string(a) +
                              "] must be n_periods x covariate_dim");
    if (!beta.allFinite())
      throw NonFinite("model: non-finite coefficient in group " + std::to_string(a + 1));
  }
  if (model.time_constant) {
    for (int a = 0; a < g; ++a) {
      const auto& beta = model.coefficients[a];
      for (int t = 1; t < beta.rows(); ++t)
        if (beta.row(t) != beta.row(0))
          throw DimensionMismatch("model: time_constant set but coefficients vary over t");
    }
  }
  for (int a = 0; a < g; ++a)
    for (int b = a + 1; b < g; ++b) {
      double sep = (model.coefficients[a] - model.coefficients[b])
                       .rowwise()
                       .norm()
                       .maxCoeff();
      if (!(sep > 0.0))
        throw DuplicateGroups("model: groups " + std::to_string(a + 1) + " and " +
                              std::to_string(b + 1) + " share identical coefficients");
    }
  if (!model.assignment.empty()) {
    if (static_cast<int>(model.assignment.size()) != panel.n_units)
      throw DimensionMismatch("model: assignment size must equal n_units");
    for (int gi : model.assignment)
      if (gi < 0 || gi >= g) throw DimensionMismatch("model: assignment entry out of range");
  }
}

namespace {

double sample_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  double ss = (v.array() - mean).square().sum();
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

PanelDataset standardize_per_unit(const PanelDataset& panel, bool covariates) {
  validate_panel(panel);
  PanelDataset out = panel;
  for (int i = 0; i < panel.n_units; ++i) {
    double sd = sample_sd(panel.outcomes.row(i).transpose());
    if (sd == 0.0)
      throw ZeroVariance("standardize: constant outcome series for unit " +
                         panel.unit_labels[i]);
    out.outcomes.row(i) /= sd;
    if (covariates) {
      for (int k = 0; k < panel.covariate_dim; ++k) {
        double xsd = sample_sd(panel.covariates[i].col(k));
        if (xsd == 0.0)
          throw ZeroVariance("standardize: constant covariate series x" +
                             std::to_string(k + 1) + " for unit " + panel.unit_labels[i]);
        out.covariates[i].col(k) /= xsd;
      }
    }
  }
  return out;
}

}  // namespace pcs
