#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pcs/errors.hpp"

namespace pcs {

// Balanced N x T panel with K-dimensional covariates. Units and periods are
// indexed 0-based internally; labels preserve the source identifiers.
struct PanelDataset {
  int n_units = 0;
  int n_periods = 0;
  int covariate_dim = 0;
  Eigen::MatrixXd outcomes;                 // N x T
  std::vector<Eigen::MatrixXd> covariates;  // N entries of T x K
  std::vector<std::string> unit_labels;
  std::vector<std::string> time_labels;
};

// Group-specific coefficient paths beta[g] (T x K) plus an optional estimated
// assignment. Group indices are 0-based internally, 1-based in all file
// formats and user-facing labels.
struct GroupModel {
  int n_groups = 0;
  bool time_constant = false;
  std::vector<Eigen::MatrixXd> coefficients;  // G entries of T x K
  std::vector<int> assignment;                // empty or N entries in [0, G)
};

// Checks shape coherence and finiteness of an assembled panel.
// Throws DimensionMismatch or NonFinite.
void validate_panel(const PanelDataset& panel);

// Checks that the model matches the panel's (T, K), that no two groups share
// an identical coefficient path, that time-constant models are constant in t,
// and that any assignment has N entries in range.
// Throws DimensionMismatch or DuplicateGroups.
void validate_model(const PanelDataset& panel, const GroupModel& model);

// Rescales each unit's outcome series to unit sample standard deviation
// (divisor T-1); with covariates=true, each per-unit covariate series too.
// Throws ZeroVariance on a constant series.
PanelDataset standardize_per_unit(const PanelDataset& panel, bool covariates = false);

}  // namespace pcs
