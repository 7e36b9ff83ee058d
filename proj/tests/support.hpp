#pragma once

// shared helpers for test binaries; not part of the library

#include <vector>

#include <Eigen/Dense>

#include "pcs/rng.hpp"
#include "pcs/special.hpp"

namespace pcs::testsupport {

inline double normal(SplitMix64& rng) { return norm_quantile(rng.uniform01()); }

inline Eigen::MatrixXd random_correlation(int p, SplitMix64& rng) {
  Eigen::MatrixXd a(p, p + 2);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p + 2; ++j) a(i, j) = normal(rng);
  Eigen::MatrixXd s = a * a.transpose();
  Eigen::VectorXd d = s.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr = d.cwiseInverse().asDiagonal() * s * d.cwiseInverse().asDiagonal();
  corr.diagonal().setOnes();
  return corr;
}

// same regularization moments applies to omega_star
inline Eigen::MatrixXd regularize_corr(const Eigen::MatrixXd& corr, double eps = 0.012) {
  Eigen::MatrixXd omega = corr;
  double det = corr.determinant();
  if (det < eps) omega.diagonal().array() += eps - det;
  return omega;
}

// refined grid search for min_{t <= 0} (D - t)' omega^-1 (D - t) over
// t in [-10, 0]^p; independent oracle for the active-set solver
inline double qlr_grid_oracle(const Eigen::VectorXd& D, const Eigen::MatrixXd& omega,
                              int points_per_dim = 21, int rounds = 6) {
  const int p = static_cast<int>(D.size());
  const Eigen::MatrixXd W = omega.llt().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(p, -10.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(p, 0.0);
  Eigen::VectorXd best_t = Eigen::VectorXd::Zero(p);
  double best = (D - best_t).dot(W * (D - best_t));
  for (int round = 0; round < rounds; ++round) {
    std::vector<int> idx(p, 0);
    Eigen::VectorXd t(p);
    while (true) {
      for (int j = 0; j < p; ++j)
        t(j) = lo(j) + (hi(j) - lo(j)) * idx[j] / (points_per_dim - 1);
      double v = (D - t).dot(W * (D - t));
      if (v < best) {
        best = v;
        best_t = t;
      }
      int j = 0;
      while (j < p && ++idx[j] == points_per_dim) idx[j++] = 0;
      if (j == p) break;
    }
    for (int j = 0; j < p; ++j) {
      double spacing = (hi(j) - lo(j)) / (points_per_dim - 1);
      lo(j) = std::max(-10.0, best_t(j) - 2.0 * spacing);
      hi(j) = std::min(0.0, best_t(j) + 2.0 * spacing);
    }
  }
  return best;
}

}  // namespace pcs::testsupport
