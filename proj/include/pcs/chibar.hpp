#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcs/qmc.hpp"

namespace pcs {

// P(Y <= 0) for Y ~ N(0, cov); cov PSD with positive diagonal (the value only
// depends on the correlations). Closed forms for p <= 3, QMC rectangle above.
double orthant_prob(const Eigen::MatrixXd& cov, const QmcConfig& cfg);

// Chi-bar-square weights of the orthant projection associated with cov.
// Returns w[0..p] with w[k] = w(p,k,cov): the weight attached to the
// chi-square_{p-k} mixture component. w[p] is the point mass at zero,
// orthant_prob(cov). Weights are positive, sum to one, and are each <= 1/2.
std::vector<double> kudo_weights(const Eigen::MatrixXd& cov, const QmcConfig& cfg);

// CDF of the QLR reference distribution: mixture over j = 1..p of scaled F
// tails, P(F_{j,dof} > t/j), with weights w(p,p-j,cov), plus the point mass at
// zero. gaussian_limit replaces F_{j,dof} scaling by the chi-square_j tail.
double fqlr_cdf(double t, const Eigen::MatrixXd& cov, double dof, bool gaussian_limit,
                const QmcConfig& cfg);

// Inverse of fqlr_cdf for p above the point mass; throws BelowPointMass for
// requests at or below it. Absolute probability tolerance (1-p)/50.
double fqlr_quantile(double p, const Eigen::MatrixXd& cov, double dof, bool gaussian_limit,
                     const QmcConfig& cfg);

}  // namespace pcs
