#pragma once

namespace pcs {

// Scalar distribution kernels. Everything below is deterministic, accepts
// non-integer dof, and is accurate to ~1e-13 relative over the ranges the
// library exercises (dof >= 1, probabilities away from denormals).

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
double reg_inc_beta(double a, double b, double x);

// Regularized incomplete gamma P(a,x) (lower) and Q(a,x) = 1 - P(a,x).
double reg_inc_gamma_p(double a, double x);
double reg_inc_gamma_q(double a, double x);

double norm_cdf(double x);
double norm_pdf(double x);
// Inverse of norm_cdf; p in (0,1).
double norm_quantile(double p);

// Student t with dof degrees of freedom.
double t_cdf(double x, double dof);
double t_tail(double x, double dof);  // P(T > x), stable in the upper tail
double t_quantile(double p, double dof);

// P(F_{d1,d2} > x).
double f_tail(double x, double d1, double d2);

// Chi-square with k degrees of freedom.
double chi2_tail(double x, double k);  // P(X > x)
double chi2_cdf(double x, double k);
double chi2_quantile(double p, double k);

}  // namespace pcs
