#include "pcs/mvprob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "pcs/errors.hpp"
#include "pcs/special.hpp"

namespace pcs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gauss-Legendre nodes/weights on [-1,1], cached by order. Newton on the
// Legendre recurrence; nodes accurate to ~1e-15.
struct GlRule {
  std::vector<double> x, w;
};

const GlRule& gauss_legendre(int m) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<GlRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return *it->second;
  auto rule = std::make_shared<GlRule>();
  rule->x.resize(m);
  rule->w.resize(m);
  int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule->x[i] = -x;
    rule->x[m - 1 - i] = x;
    rule->w[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    rule->w[m - 1 - i] = rule->w[i];
  }
  cache[m] = rule;
  return *rule;
}

// sqrt(W/dof) quadrature nodes for the t scale mixture, W ~ chi2_dof mapped
// through its quantile at Gauss-Legendre abscissae on (0,1). Cached by dof.
struct ChiNodes {
  std::vector<double> s, w;
};

const ChiNodes& chi_nodes(double dof) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<ChiNodes>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dof);
  if (it != cache.end()) return *it->second;
  // the quantile map has unbounded derivative at both endpoints, so the unit
  // interval is split into panels that shrink toward 0 and 1
  const GlRule& gl = gauss_legendre(48);
  constexpr double kCuts[] = {0.0, 0.02, 0.15, 0.5, 0.85, 0.98, 1.0};
  auto nodes = std::make_shared<ChiNodes>();
  for (int panel = 0; panel + 1 < static_cast<int>(std::size(kCuts)); ++panel) {
    double a = kCuts[panel], b = kCuts[panel + 1];
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      double u = 0.5 * (b - a) * (gl.x[i] + 1.0) + a;
      nodes->s.push_back(std::sqrt(chi2_quantile(u, dof) / dof));
      nodes->w.push_back(0.5 * (b - a) * gl.w[i]);
    }
  }
  cache[dof] = nodes;
  return *nodes;
}

void check_corr(const Eigen::MatrixXd& corr) {
  int p = static_cast<int>(corr.rows());
  if (corr.cols() != p || p < 1) throw DimensionMismatch("correlation matrix must be square");
  for (int i = 0; i < p; ++i) {
    if (std::fabs(corr(i, i) - 1.0) > 1e-8)
      throw DomainError("correlation matrix must have unit diagonal");
    for (int j = 0; j < i; ++j) {
      if (!std::isfinite(corr(i, j)) || std::fabs(corr(i, j) - corr(j, i)) > 1e-10)
        throw DomainError("correlation matrix must be symmetric and finite");
      if (std::fabs(corr(i, j)) > 1.0 + 1e-12)
        throw CholeskyFailure("correlation entry outside [-1,1]");
    }
  }
}

void check_bounds(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, int p) {
  if (lower.size() != p || upper.size() != p)
    throw DimensionMismatch("bound vectors must match the matrix dimension");
  for (int i = 0; i < p; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i])) throw NonFinite("bounds contain NaN");
    if (lower[i] > upper[i]) throw DomainError("lower bound exceeds upper bound");
  }
}

double phi_or_limit(double x) {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return norm_cdf(x);
}

// P(a1 < X <= b1, a2 < Y <= b2) from the 4-corner bvn expansion.
double bvn_rect(double a1, double b1, double a2, double b2, double rho) {
  auto F = [&](double x, double y) -> double {
    if (x == -kInf || y == -kInf) return 0.0;
    if (x == kInf && y == kInf) return 1.0;
    if (x == kInf) return norm_cdf(y);
    if (y == kInf) return norm_cdf(x);
    return bvn_cdf(x, y, rho);
  };
  double v = F(b1, b2) - F(a1, b2) - F(b1, a2) + F(a1, a2);
  return std::min(1.0, std::max(0.0, v));
}

// Reordered Cholesky system for the Genz sequential transform.
struct GenzSystem {
  int p = 0;
  Eigen::MatrixXd L;
  std::vector<int> perm;  // permuted index -> original index
};

GenzSystem genz_prepare(const Eigen::MatrixXd& corr, Eigen::VectorXd& a, Eigen::VectorXd& b) {
  int p = static_cast<int>(corr.rows());
  GenzSystem sys;
  sys.p = p;
  sys.L = Eigen::MatrixXd::Zero(p, p);
  sys.perm.resize(p);
  for (int i = 0; i < p; ++i) sys.perm[i] = i;
  Eigen::MatrixXd C = corr;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  auto& L = sys.L;
  for (int i = 0; i < p; ++i) {
    // pick the remaining variable with the smallest conditional probability
    int best = i;
    double bestp = 2.0;
    for (int j = i; j < p; ++j) {
      double s2 = C(j, j) - L.row(j).head(i).squaredNorm();
      double sd = std::sqrt(std::max(s2, 1e-18));
      double mu = i > 0 ? L.row(j).head(i).dot(y.head(i)) : 0.0;
      double lo = a[j] == -kInf ? 0.0 : norm_cdf((a[j] - mu) / sd);
      double hi = b[j] == kInf ? 1.0 : norm_cdf((b[j] - mu) / sd);
      double pj = hi - lo;
      if (pj < bestp) {
        bestp = pj;
        best = j;
      }
    }
    if (best != i) {
      std::swap(sys.perm[i], sys.perm[best]);
      std::swap(a[i], a[best]);
      std::swap(b[i], b[best]);
      C.row(i).swap(C.row(best));
      C.col(i).swap(C.col(best));
      for (int k = 0; k < i; ++k) std::swap(L(i, k), L(best, k));
    }
    double s2 = C(i, i) - L.row(i).head(i).squaredNorm();
    if (s2 > 1e-12) {
      L(i, i) = std::sqrt(s2);
      for (int j = i + 1; j < p; ++j)
        L(j, i) = (C(j, i) - L.row(j).head(i).dot(L.row(i).head(i))) / L(i, i);
    } else if (s2 > -1e-6) {
      L(i, i) = 0.0;  // numerically singular direction; handled as a step in the integrand
    } else {
      throw CholeskyFailure("correlation matrix is not positive semidefinite");
    }
    double mu = i > 0 ? L.row(i).head(i).dot(y.head(i)) : 0.0;
    double sd = L(i, i) > 0.0 ? L(i, i) : 1.0;
    double lo = (a[i] == -kInf) ? -kInf : (a[i] - mu) / sd;
    double hi = (b[i] == kInf) ? kInf : (b[i] - mu) / sd;
    double den = phi_or_limit(hi) - phi_or_limit(lo);
    if (den > 1e-300) {
      double plo = (lo == -kInf) ? 0.0 : norm_pdf(lo);
      double phi_ = (hi == kInf) ? 0.0 : norm_pdf(hi);
      y[i] = (plo - phi_) / den;
    } else {
      y[i] = 0.0;
    }
  }
  return sys;
}

// One path of the sequential transform; u has p-1 coordinates, s scales the
// finite bounds (t scale mixture; s = 1 for the normal case).
double genz_path(const GenzSystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 double s, const double* u, double* zbuf) {
  const auto& L = sys.L;
  int p = sys.p;
  double f = 1.0;
  for (int i = 0; i < p; ++i) {
    double mu = 0.0;
    for (int k = 0; k < i; ++k) mu += L(i, k) * zbuf[k];
    double d, e;
    if (L(i, i) > 0.0) {
      d = (a[i] == -kInf) ? 0.0 : norm_cdf((a[i] * s - mu) / L(i, i));
      e = (b[i] == kInf) ? 1.0 : norm_cdf((b[i] * s - mu) / L(i, i));
    } else {
      d = (a[i] == -kInf) ? 0.0 : (a[i] * s - mu > 0.0 ? 1.0 : 0.0);
      e = (b[i] == kInf) ? 1.0 : (b[i] * s - mu >= 0.0 ? 1.0 : 0.0);
    }
    double w = e - d;
    if (w <= 0.0) return 0.0;
    f *= w;
    if (i + 1 < p) {
      double t = d + u[i] * w;
      t = std::min(1.0 - 1e-16, std::max(1e-16, t));
      zbuf[i] = norm_quantile(t);
    }
  }
  return f;
}

// Randomized lattice integration of the Genz integrand. with_chi adds a
// leading dimension for the t scale mixture.
QmcEstimate genz_qmc(const GenzSystem& sys, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     double dof, bool with_chi, const QmcConfig& cfg) {
  int dim = std::max(1, sys.p - 1 + (with_chi ? 1 : 0));
  LatticeRule rule(cfg.n_points, dim);
  int reps = std::max(1, cfg.n_randomizations);
  std::vector<double> means(reps);
  std::vector<double> pt;
  std::vector<double> zbuf(std::max(1, sys.p));
  for (int r = 0; r < reps; ++r) {
    std::vector<double> shift = qmc_shift(cfg, r, dim);
    double acc = 0.0;
    for (int k = 0; k < rule.n; ++k) {
      rule.point(k, shift, pt);
      double s = 1.0;
      const double* inner = pt.data();
      if (with_chi) {
        double u0 = std::min(1.0 - 1e-16, std::max(1e-16, pt[0]));
        s = std::sqrt(chi2_quantile(u0, dof) / dof);
        inner = pt.data() + 1;
      }
      acc += genz_path(sys, a, b, s, inner, zbuf.data());
    }
    means[r] = acc / rule.n;
  }
  QmcEstimate est;
  for (double m : means) est.value += m;
  est.value /= reps;
  double ss = 0.0;
  for (double m : means) ss += (m - est.value) * (m - est.value);
  est.std_error = reps > 1 ? std::sqrt(ss / (reps * (reps - 1.0))) : 0.0;
  return est;
}

Eigen::MatrixXd to_correlation(const Eigen::MatrixXd& scale, Eigen::VectorXd& diag_sd) {
  int p = static_cast<int>(scale.rows());
  if (scale.cols() != p || p < 1) throw DimensionMismatch("scale matrix must be square");
  diag_sd.resize(p);
  for (int i = 0; i < p; ++i) {
    double v = scale(i, i);
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("scale matrix needs a positive diagonal");
    diag_sd[i] = std::sqrt(v);
  }
  Eigen::MatrixXd corr(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (!std::isfinite(scale(i, j))) throw NonFinite("scale matrix contains non-finite entries");
      corr(i, j) = scale(i, j) / (diag_sd[i] * diag_sd[j]);
    }
    corr(i, i) = 1.0;
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j)
      if (std::fabs(corr(i, j) - corr(j, i)) > 1e-8)
        throw DomainError("scale matrix must be symmetric");
  return corr;
}

// Deterministic chi-mixture path for the bivariate t upper orthant-style
// rectangle P(X <= b) with correlation rho.
double bvt_upper(double b1, double b2, double rho, double dof) {
  const ChiNodes& nodes = chi_nodes(dof);
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.s.size(); ++i) {
    double s = nodes.s[i];
    acc += nodes.w[i] * bvn_rect(-kInf, b1 == kInf ? kInf : b1 * s, -kInf,
                                 b2 == kInf ? kInf : b2 * s, rho);
  }
  return std::min(1.0, std::max(0.0, acc));
}

double max_cdf_impl(double x, const Eigen::MatrixXd& scale, double dof, bool gaussian,
                    const QmcConfig& cfg) {
  Eigen::VectorXd sd;
  Eigen::MatrixXd corr = to_correlation(scale, sd);
  int p = static_cast<int>(corr.rows());
  if (p == 1) {
    double b = x / sd[0];
    return gaussian ? norm_cdf(b) : t_cdf(b, dof);
  }
  if (p == 2) {
    double b1 = x / sd[0], b2 = x / sd[1];
    if (gaussian) return bvn_rect(-kInf, b1, -kInf, b2, corr(0, 1));
    return bvt_upper(b1, b2, corr(0, 1), dof);
  }
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(p, -kInf);
  Eigen::VectorXd upper(p);
  for (int i = 0; i < p; ++i) upper[i] = x / sd[i];
  Eigen::VectorXd a = lower, b = upper;
  GenzSystem sys = genz_prepare(corr, a, b);
  QmcEstimate est = genz_qmc(sys, a, b, dof, !gaussian, cfg);
  return std::min(1.0, std::max(0.0, est.value));
}

double max_quantile_impl(double prob, const Eigen::MatrixXd& scale, double dof, bool gaussian,
                         const QmcConfig& cfg) {
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("max quantile: p outside (0,1)");
  Eigen::VectorXd sd;
  Eigen::MatrixXd corr = to_correlation(scale, sd);
  int p = static_cast<int>(corr.rows());
  double sdmax = sd.maxCoeff();
  auto scalar_q = [&](double q) { return gaussian ? norm_quantile(q) : t_quantile(q, dof); };
  // sandwich: max of p dependent coordinates is stochastically between one
  // coordinate and the Bonferroni union bound
  double lo = sdmax * scalar_q(prob);
  double hi = sdmax * scalar_q(1.0 - (1.0 - prob) / p);
  double pad = 0.1 * (hi - lo) + 1e-6;
  lo -= pad;
  hi += pad;
  auto cdf = [&](double x) { return max_cdf_impl(x, scale, dof, gaussian, cfg); };
  int expand = 0;
  while (cdf(hi) < prob) {
    hi += std::max(1.0, hi - lo);
    if (++expand > 60) throw BracketFailure("max quantile: upper bracket not found");
  }
  expand = 0;
  while (cdf(lo) > prob) {
    lo -= std::max(1.0, hi - lo);
    if (++expand > 60) throw BracketFailure("max quantile: lower bracket not found");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo >= 1e-12 * (1.0 + std::fabs(mid)); ++it) {
    mid = 0.5 * (lo + hi);
    if (cdf(mid) >= prob)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k)) throw DomainError("bvn_cdf: NaN bound");
  if (!(rho > -1.0 && rho < 1.0)) {
    if (rho == 1.0) return norm_cdf(std::min(h, k));
    if (rho == -1.0) {
      double v = norm_cdf(h) + norm_cdf(k) - 1.0;
      return std::max(0.0, v);
    }
    throw DomainError("bvn_cdf: correlation outside [-1,1]");
  }
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf && k == kInf) return 1.0;
  if (h == kInf) return norm_cdf(k);
  if (k == kInf) return norm_cdf(h);
  double base = norm_cdf(h) * norm_cdf(k);
  if (rho == 0.0) return base;
  // theta integral (Drezner-Wesolowsky form); the integrand stays bounded as
  // theta -> asin(rho) so a fixed Gauss-Legendre rule converges fast; node
  // count grows near |rho|=1 where the arc is longest.
  int m = std::fabs(rho) < 0.8 ? 24 : (std::fabs(rho) < 0.99 ? 48 : 96);
  const GlRule& gl = gauss_legendre(m);
  double asr = std::asin(rho);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    double th = 0.5 * asr * (gl.x[i] + 1.0);
    double sn = std::sin(th);
    double c2 = 1.0 - sn * sn;
    acc += 0.5 * asr * gl.w[i] * std::exp(-(h * h + k * k - 2.0 * h * k * sn) / (2.0 * c2));
  }
  double v = base + acc / (2.0 * M_PI);
  return std::min(1.0, std::max(0.0, v));
}

QmcEstimate mvn_rect_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const Eigen::MatrixXd& corr, const QmcConfig& cfg) {
  check_corr(corr);
  int p = static_cast<int>(corr.rows());
  check_bounds(lower, upper, p);
  QmcEstimate est;
  if (p == 1) {
    est.value = phi_or_limit(upper[0]) - phi_or_limit(lower[0]);
    return est;
  }
  if (p == 2) {
    est.value = bvn_rect(lower[0], upper[0], lower[1], upper[1], corr(0, 1));
    return est;
  }
  Eigen::VectorXd a = lower, b = upper;
  GenzSystem sys = genz_prepare(corr, a, b);
  return genz_qmc(sys, a, b, 0.0, false, cfg);
}

QmcEstimate mvt_rect_prob(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const Eigen::MatrixXd& corr, double dof, const QmcConfig& cfg) {
  check_corr(corr);
  if (!(dof > 0.0)) throw DomainError("mvt_rect_prob: dof must be positive");
  int p = static_cast<int>(corr.rows());
  check_bounds(lower, upper, p);
  QmcEstimate est;
  if (p == 1) {
    double lo = lower[0] == -kInf ? 0.0 : t_cdf(lower[0], dof);
    double hi = upper[0] == kInf ? 1.0 : t_cdf(upper[0], dof);
    est.value = std::max(0.0, hi - lo);
    return est;
  }
  if (p == 2) {
    const ChiNodes& nodes = chi_nodes(dof);
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.s.size(); ++i) {
      double s = nodes.s[i];
      auto sc = [&](double v) { return std::isinf(v) ? v : v * s; };
      acc += nodes.w[i] * bvn_rect(sc(lower[0]), sc(upper[0]), sc(lower[1]), sc(upper[1]),
                                   corr(0, 1));
    }
    est.value = std::min(1.0, std::max(0.0, acc));
    return est;
  }
  Eigen::VectorXd a = lower, b = upper;
  GenzSystem sys = genz_prepare(corr, a, b);
  return genz_qmc(sys, a, b, dof, true, cfg);
}

double mvt_max_cdf(double x, const Eigen::MatrixXd& scale, double dof, const QmcConfig& cfg) {
  if (!(dof > 0.0)) throw DomainError("mvt_max_cdf: dof must be positive");
  if (std::isnan(x)) throw DomainError("mvt_max_cdf: x is NaN");
  return max_cdf_impl(x, scale, dof, false, cfg);
}

double mvt_max_quantile(double p, const Eigen::MatrixXd& scale, double dof, const QmcConfig& cfg) {
  if (!(dof > 0.0)) throw DomainError("mvt_max_quantile: dof must be positive");
  return max_quantile_impl(p, scale, dof, false, cfg);
}

double mvn_max_cdf(double x, const Eigen::MatrixXd& scale, const QmcConfig& cfg) {
  if (std::isnan(x)) throw DomainError("mvn_max_cdf: x is NaN");
  return max_cdf_impl(x, scale, 0.0, true, cfg);
}

double mvn_max_quantile(double p, const Eigen::MatrixXd& scale, const QmcConfig& cfg) {
  return max_quantile_impl(p, scale, 0.0, true, cfg);
}

}  // namespace pcs
