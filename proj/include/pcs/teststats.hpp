#pragma once

#include <vector>

#include <Eigen/Dense>

#include "pcs/critical.hpp"
#include "pcs/moments.hpp"

namespace pcs {

// Solution of min_{t <= 0} (D - t)' omega^-1 (D - t).
struct ProjectionResult {
  double value = 0.0;
  Eigen::VectorXd minimizer;    // t*, componentwise <= 0
  std::vector<int> active_set;  // indices with t*_j = 0
};

// Exact orthant projection by enumerating active sets (2^p subsets, p <= 16).
// Throws SingularOmega when the Cholesky pivot of omega falls below 1e-12.
ProjectionResult qlr_project(const Eigen::VectorXd& D, const Eigen::MatrixXd& omega);

double max_statistic(const MomentBlock& block);
ProjectionResult qlr_statistic(const MomentBlock& block);

// SNS and MAX share the max statistic; QLR uses the projection value.
double statistic(Method method, const MomentBlock& block);

}  // namespace pcs
