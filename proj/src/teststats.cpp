#include "pcs/teststats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "pcs/errors.hpp"

namespace pcs {

ProjectionResult qlr_project(const Eigen::VectorXd& D, const Eigen::MatrixXd& omega) {
  const int p = static_cast<int>(D.size());
  if (p < 1 || omega.rows() != p || omega.cols() != p)
    throw DimensionMismatch("qlr_project: omega must be square and match D");
  if (p > 16) throw DimensionMismatch("qlr_project: dimension above 16");

  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw SingularOmega("qlr_project: omega is not positive definite");
  Eigen::MatrixXd L = llt.matrixL();
  for (int j = 0; j < p; ++j)
    if (L(j, j) * L(j, j) < 1e-12)
      throw SingularOmega("qlr_project: omega pivot below 1e-12");
  const Eigen::MatrixXd W = llt.solve(Eigen::MatrixXd::Identity(p, p));

  if (D.maxCoeff() <= 0.0) {
    // interior solution t = D, value exactly zero
    ProjectionResult res;
    res.minimizer = D;
    for (int j = 0; j < p; ++j)
      if (D(j) == 0.0) res.active_set.push_back(j);
    return res;
  }

  const double scale = std::max(1.0, D.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;

  // masks ordered by active-set size so value ties resolve toward smaller sets
  std::vector<unsigned> masks(1u << p);
  for (unsigned m = 0; m < masks.size(); ++m) masks[m] = m;
  std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    return std::popcount(a) < std::popcount(b);
  });

  bool found = false;
  double best_value = 0.0;
  Eigen::VectorXd best_t;
  double fallback_value = 0.0;  // min over primal-feasible only
  Eigen::VectorXd fallback_t;
  bool have_fallback = false;

  Eigen::VectorXd t(p);
  for (unsigned mask : masks) {
    // mask bit j set: t_j pinned at 0 (active); clear: free
    std::vector<int> free_idx;
    for (int j = 0; j < p; ++j)
      if (!(mask >> j & 1u)) free_idx.push_back(j);
    const int nf = static_cast<int>(free_idx.size());

    t.setZero();
    if (nf > 0) {
      // stationarity on the free block: [W(D - t)]_F = 0
      Eigen::MatrixXd WFF(nf, nf);
      Eigen::VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b) WFF(a, b) = W(free_idx[a], free_idx[b]);
        rhs(a) = W.row(free_idx[a]).dot(D);
      }
      Eigen::VectorXd tf = WFF.llt().solve(rhs);
      bool primal = true;
      for (int a = 0; a < nf; ++a) {
        if (tf(a) > tol) {
          primal = false;
          break;
        }
        t(free_idx[a]) = std::min(tf(a), 0.0);
      }
      if (!primal) continue;
    }

    Eigen::VectorXd v = W * (D - t);
    double value = std::max(0.0, (D - t).dot(v));
    if (!have_fallback || value < fallback_value) {
      have_fallback = true;
      fallback_value = value;
      fallback_t = t;
    }
    bool dual = true;
    for (int j = 0; j < p; ++j)
      if ((mask >> j & 1u) && v(j) < -tol) {
        dual = false;
        break;
      }
    if (!dual) continue;
    if (!found || value < best_value) {
      found = true;
      best_value = value;
      best_t = t;
    }
  }

  ProjectionResult res;
  if (found) {
    res.value = best_value;
    res.minimizer = best_t;
  } else {
    // all dual checks failed within tolerance; keep the best feasible point
    res.value = fallback_value;
    res.minimizer = fallback_t;
  }
  for (int j = 0; j < p; ++j)
    if (std::fabs(res.minimizer(j)) <= tol) {
      res.minimizer(j) = 0.0;
      res.active_set.push_back(j);
    }
  return res;
}

double max_statistic(const MomentBlock& block) { return block.D_hat.maxCoeff(); }

ProjectionResult qlr_statistic(const MomentBlock& block) {
  return qlr_project(block.D_hat, block.omega);
}

double statistic(Method method, const MomentBlock& block) {
  switch (method) {
    case Method::SNS:
    case Method::MAX:
      return max_statistic(block);
    case Method::QLR:
      return qlr_statistic(block).value;
  }
  throw DomainError("statistic: unknown method");
}

}  // namespace pcs
