#include "pcs/chibar.hpp"

#include <cmath>

#include "pcs/errors.hpp"
#include "pcs/mvprob.hpp"
#include "pcs/special.hpp"

namespace pcs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd cov_to_corr(const Eigen::MatrixXd& cov) {
  int p = static_cast<int>(cov.rows());
  if (cov.cols() != p || p < 1) throw DimensionMismatch("covariance matrix must be square");
  Eigen::VectorXd sd(p);
  for (int i = 0; i < p; ++i) {
    if (!(cov(i, i) > 0.0) || !std::isfinite(cov(i, i)))
      throw DomainError("covariance needs a positive diagonal");
    sd[i] = std::sqrt(cov(i, i));
  }
  Eigen::MatrixXd corr(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (!std::isfinite(cov(i, j))) throw NonFinite("covariance contains non-finite entries");
      corr(i, j) = cov(i, j) / (sd[i] * sd[j]);
    }
    corr(i, i) = 1.0;
  }
  return corr;
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularOmega("matrix is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

}  // namespace

double orthant_prob(const Eigen::MatrixXd& cov, const QmcConfig& cfg) {
  Eigen::MatrixXd corr = cov_to_corr(cov);
  int p = static_cast<int>(corr.rows());
  if (p == 1) return 0.5;
  if (p == 2) return 0.25 + std::asin(std::clamp(corr(0, 1), -1.0, 1.0)) / (2.0 * M_PI);
  if (p == 3) {
    double s = std::asin(std::clamp(corr(0, 1), -1.0, 1.0)) +
               std::asin(std::clamp(corr(0, 2), -1.0, 1.0)) +
               std::asin(std::clamp(corr(1, 2), -1.0, 1.0));
    return 0.125 + s / (4.0 * M_PI);
  }
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(p, -kInf);
  Eigen::VectorXd upper = Eigen::VectorXd::Zero(p);
  return mvn_rect_prob(lower, upper, corr, cfg).value;
}

std::vector<double> kudo_weights(const Eigen::MatrixXd& cov, const QmcConfig& cfg) {
  int p = static_cast<int>(cov.rows());
  if (p < 1 || p > 16) throw DomainError("kudo_weights: dimension must be in 1..16");
  Eigen::MatrixXd V = cov_to_corr(cov);
  // correlation rescaling leaves every orthant in the sum unchanged
  Eigen::MatrixXd W = spd_inverse(V);
  std::vector<double> w(p + 1, 0.0);
  std::vector<int> M, Mc;
  for (unsigned mask = 0; mask < (1u << p); ++mask) {
    M.clear();
    Mc.clear();
    for (int i = 0; i < p; ++i) {
      if (mask & (1u << i))
        M.push_back(i);
      else
        Mc.push_back(i);
    }
    double p1 = M.empty() ? 1.0 : orthant_prob(spd_inverse(submatrix(V, M)), cfg);
    double p2 = Mc.empty() ? 1.0 : orthant_prob(spd_inverse(submatrix(W, Mc)), cfg);
    w[p - static_cast<int>(M.size())] += p1 * p2;
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  if (std::fabs(sum - 1.0) > 1e-2)
    throw SingularOmega("kudo_weights: weights failed the unit-sum check");
  return w;
}

double fqlr_cdf(double t, const Eigen::MatrixXd& cov, double dof, bool gaussian_limit,
                const QmcConfig& cfg) {
  if (!gaussian_limit && !(dof > 0.0)) throw DomainError("fqlr_cdf: dof must be positive");
  if (std::isnan(t)) throw DomainError("fqlr_cdf: t is NaN");
  std::vector<double> w = kudo_weights(cov, cfg);
  int p = static_cast<int>(cov.rows());
  if (t < 0.0) return 0.0;
  if (t == 0.0) return w[p];
  double tail = 0.0;
  for (int j = 1; j <= p; ++j) {
    double pj = gaussian_limit ? chi2_tail(t, j) : f_tail(t / j, j, dof);
    tail += w[p - j] * pj;
  }
  return std::min(1.0, std::max(0.0, 1.0 - tail));
}

double fqlr_quantile(double p, const Eigen::MatrixXd& cov, double dof, bool gaussian_limit,
                     const QmcConfig& cfg) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("fqlr_quantile: p outside (0,1)");
  if (!gaussian_limit && !(dof > 0.0)) throw DomainError("fqlr_quantile: dof must be positive");
  std::vector<double> w = kudo_weights(cov, cfg);
  int dim = static_cast<int>(cov.rows());
  double pm = w[dim];
  if (p <= pm)
    throw BelowPointMass("fqlr_quantile: requested probability does not exceed the point mass");
  auto cdf = [&](double t) {
    double tail = 0.0;
    for (int j = 1; j <= dim; ++j) {
      double pj = gaussian_limit ? chi2_tail(t, j) : f_tail(t / j, j, dof);
      tail += w[dim - j] * pj;
    }
    return 1.0 - tail;
  };
  double lo = 0.0, hi = 1.0;
  int expand = 0;
  while (cdf(hi) < p) {
    hi *= 2.0;
    if (++expand > 100) throw BracketFailure("fqlr_quantile: no upper bracket");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo >= 1e-13 * (1.0 + mid); ++it) {
    mid = 0.5 * (lo + hi);
    if (cdf(mid) >= p)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace pcs
