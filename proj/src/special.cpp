#include "pcs/special.hpp"

#include <cmath>
#include <limits>

#include "pcs/errors.hpp"

namespace pcs {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 1e-15;

// Lentz continued fraction for I_x(a,b); assumes x < (a+1)/(a+b+2) so the
// fraction converges quickly. Standard even/odd coefficient recursion.
double beta_cf(double a, double b, double x) {
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 400; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw BracketFailure("incomplete beta continued fraction did not converge");
}

double gamma_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps)
      return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw BracketFailure("incomplete gamma series did not converge");
}

double gamma_cf(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 10000; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps)
      return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  throw BracketFailure("incomplete gamma continued fraction did not converge");
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("reg_inc_beta: a,b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double reg_inc_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("reg_inc_gamma: a must be positive");
  if (!(x >= 0.0)) throw DomainError("reg_inc_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cf(a, x);
}

double reg_inc_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("reg_inc_gamma: a must be positive");
  if (!(x >= 0.0)) throw DomainError("reg_inc_gamma: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cf(a, x);
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014326779; }

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile: p outside (0,1)");
  if (p == 0.5) return 0.0;
  // Abramowitz-Stegun 26.2.23 start (|err| < 4.5e-4), then Newton in the
  // smaller tail where both Phi and p are well scaled.
  double q = std::min(p, 1.0 - p);
  double t = std::sqrt(-2.0 * std::log(q));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
  x = -x;  // quantile of the lower-tail mass q
  for (int it = 0; it < 4; ++it) {
    double err = norm_cdf(x) - q;
    double step = err / norm_pdf(x);
    // pdf underflows only for |x| > 38, far outside double-precision p range
    x -= step;
    if (std::fabs(step) < 1e-14 * (1.0 + std::fabs(x))) break;
  }
  return p < 0.5 ? x : -x;
}

double t_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("t_cdf: dof must be positive");
  if (std::isnan(x)) throw DomainError("t_cdf: x is NaN");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  double half = 0.5 * reg_inc_beta(0.5 * dof, 0.5, dof / (dof + x * x));
  return x > 0.0 ? 1.0 - half : half;
}

double t_tail(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("t_tail: dof must be positive");
  if (std::isnan(x)) throw DomainError("t_tail: x is NaN");
  if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
  double half = 0.5 * reg_inc_beta(0.5 * dof, 0.5, dof / (dof + x * x));
  return x > 0.0 ? half : 1.0 - half;
}

double t_quantile(double p, double dof) {
  if (!(dof > 0.0)) throw DomainError("t_quantile: dof must be positive");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p outside (0,1)");
  if (p == 0.5) return 0.0;
  double q = std::min(p, 1.0 - p);
  // Cornish-Fisher start from the normal quantile.
  double z = norm_quantile(q);
  double z3 = z * z * z, z5 = z3 * z * z;
  double x = z + (z3 + z) / (4.0 * dof) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * dof * dof);
  // Safeguarded Newton on the lower tail; the t cdf is smooth and monotone so
  // a bisection bracket around the start always exists.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = 0.0;
  if (!(t_cdf(x, dof) > 0.0) || x >= 0.0) x = -1.0;
  for (int it = 0; it < 80; ++it) {
    double err = t_cdf(x, dof) - q;
    if (err > 0.0)
      hi = std::min(hi, x);
    else
      lo = std::isinf(lo) ? x : std::max(lo, x);
    double lpdf = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                  0.5 * std::log(dof * M_PI) - 0.5 * (dof + 1.0) * std::log1p(x * x / dof);
    double step = err / std::exp(lpdf);
    double next = x - step;
    if (!(next > lo && next < hi)) {
      if (std::isinf(lo)) {
        next = 2.0 * x - 1.0;  // expand downwards until the bracket closes
      } else {
        next = 0.5 * (lo + hi);
      }
    }
    if (std::fabs(next - x) < 1e-12 * (1.0 + std::fabs(x)) && std::fabs(err) < 1e-13) {
      x = next;
      break;
    }
    x = next;
  }
  return p < 0.5 ? x : -x;
}

double f_tail(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw DomainError("f_tail: dof must be positive");
  if (std::isnan(x)) throw DomainError("f_tail: x is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return reg_inc_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x));
}

double chi2_tail(double x, double k) {
  if (!(k > 0.0)) throw DomainError("chi2_tail: dof must be positive");
  if (std::isnan(x)) throw DomainError("chi2_tail: x is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return reg_inc_gamma_q(0.5 * k, 0.5 * x);
}

double chi2_cdf(double x, double k) {
  if (!(k > 0.0)) throw DomainError("chi2_cdf: dof must be positive");
  if (std::isnan(x)) throw DomainError("chi2_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return reg_inc_gamma_p(0.5 * k, 0.5 * x);
}

double chi2_quantile(double p, double k) {
  if (!(k > 0.0)) throw DomainError("chi2_quantile: dof must be positive");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("chi2_quantile: p outside (0,1)");
  // Wilson-Hilferty start, then safeguarded Newton.
  double z = norm_quantile(p);
  double c = 2.0 / (9.0 * k);
  double x = k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
  if (!(x > 0.0) || !std::isfinite(x)) x = k;
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    double err = chi2_cdf(x, k) - p;
    if (err > 0.0)
      hi = std::min(hi, x);
    else
      lo = std::max(lo, x);
    double lpdf = (0.5 * k - 1.0) * std::log(x) - 0.5 * x - std::lgamma(0.5 * k) -
                  0.5 * k * std::log(2.0);
    double step = err / std::exp(lpdf);
    double next = x - step;
    if (!(next > lo && next < hi)) next = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
    if (std::fabs(next - x) < 1e-12 * (1.0 + std::fabs(x)) && std::fabs(err) < 1e-13) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace pcs
