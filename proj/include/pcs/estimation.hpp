#pragma once

#include <cstdint>

#include "pcs/core.hpp"

namespace pcs {

struct EstimatorConfig {
  int n_groups = 2;
  int restarts = 50;
  int max_iter = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  bool time_constant = false;
  int threads = 1;
};

// mean squared residual (NT)^-1 sum_i sum_t (y_it - x_it' beta_{g_i,t})^2
double group_objective(const PanelDataset& panel, const GroupModel& model);

// least-squares assignment g_i = argmin_g sum_t (y_it - x_it' beta_{g,t})^2,
// ties to the smallest group index; returns a copy of the model with the
// assignment filled in
GroupModel assign_groups(const PanelDataset& panel, const GroupModel& model);

// kmeans-type alternating minimization over coefficients and assignments,
// best of config.restarts random initializations; group labels are
// canonicalized by the first period's first coefficient ascending
GroupModel fit_grouped(const PanelDataset& panel, const EstimatorConfig& config);

}  // namespace pcs
