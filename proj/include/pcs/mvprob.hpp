#pragma once

#include <Eigen/Dense>

#include "pcs/qmc.hpp"

namespace pcs {

struct QmcEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for closed-form / deterministic-quadrature paths
};

// Bivariate standard normal P(X <= h, Y <= k) with correlation rho. Exact
// theta-integral form; accurate to ~1e-13 for |rho| <= 0.995.
double bvn_cdf(double h, double k, double rho);

// P(lower <= X <= upper) for X ~ N(0, corr). corr must be symmetric PSD with
// unit diagonal. Entries of lower/upper may be +-inf. p = 1,2 use closed
// forms; otherwise a randomized-lattice Genz transform with variable
// reordering. Identical QmcConfig gives bit-identical output.
QmcEstimate mvn_rect_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const Eigen::MatrixXd& corr, const QmcConfig& cfg);

// Same rectangle for the multivariate t with dof degrees of freedom,
// integrated through the scale mixture (one extra QMC dimension).
QmcEstimate mvt_rect_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const Eigen::MatrixXd& corr, double dof, const QmcConfig& cfg);

// P(max_j X_j <= x) for X ~ t_dof with scale matrix `scale` (PSD, any positive
// diagonal; internally reduced to correlation scale). p <= 2 uses a
// deterministic chi-mixture quadrature, larger p the QMC rectangle.
double mvt_max_cdf(double x, const Eigen::MatrixXd& scale, double dof, const QmcConfig& cfg);

// Inverse of mvt_max_cdf in x for fixed (scale, dof). Root-finding runs on the
// frozen point set of `cfg`, with absolute probability tolerance (1-p)/50.
double mvt_max_quantile(double p, const Eigen::MatrixXd& scale, double dof, const QmcConfig& cfg);

// Gaussian-limit versions of the two above.
double mvn_max_cdf(double x, const Eigen::MatrixXd& scale, const QmcConfig& cfg);
double mvn_max_quantile(double p, const Eigen::MatrixXd& scale, const QmcConfig& cfg);

}  // namespace pcs
