#include "pcs/critical.hpp"

#include <cmath>

#include "pcs/chibar.hpp"
#include "pcs/errors.hpp"
#include "pcs/mvprob.hpp"
#include "pcs/special.hpp"

namespace pcs {

const char* method_name(Method m) {
  switch (m) {
    case Method::SNS: return "sns";
    case Method::MAX: return "max";
    case Method::QLR: return "qlr";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "sns" || s == "SNS") return Method::SNS;
  if (s == "max" || s == "MAX") return Method::MAX;
  if (s == "qlr" || s == "QLR") return Method::QLR;
  throw ParseError("unknown method '" + s + "' (expected sns, max or qlr)");
}

double critical_value(const CriticalValueRequest& req, const QmcConfig& cfg) {
  if (!(req.alpha > 0.0 && req.alpha < 1.0))
    throw DomainError("critical_value: alpha outside (0,1)");
  if (req.n_eff < 1) throw DomainError("critical_value: n_eff must be at least 1");
  if (req.groups < 2) throw DomainError("critical_value: need at least two groups");
  if (!req.gaussian_limit && !(req.dof > 0.0))
    throw DomainError("critical_value: dof must be positive");
  int p = req.groups - 1;
  Eigen::MatrixXd omega = req.omega;
  if (omega.size() == 0) omega = Eigen::MatrixXd::Identity(p, p);
  if (omega.rows() != p || omega.cols() != p)
    throw DimensionMismatch("critical_value: omega must be (G-1)x(G-1)");
  // finite-T scale factor from studentizing with the sample (not population)
  // moments; disappears in the gaussian limit
  double factor = req.gaussian_limit ? 1.0 : std::sqrt((req.dof + 1.0) / req.dof);
  double n = static_cast<double>(req.n_eff);
  switch (req.method) {
    case Method::SNS: {
      double q = 1.0 - req.alpha / ((req.groups - 1) * n);
      return factor * (req.gaussian_limit ? norm_quantile(q) : t_quantile(q, req.dof));
    }
    case Method::MAX: {
      double q = 1.0 - req.alpha / n;
      return factor * (req.gaussian_limit ? mvn_max_quantile(q, omega, cfg)
                                          : mvt_max_quantile(q, omega, req.dof, cfg));
    }
    case Method::QLR: {
      double q = 1.0 - req.alpha / n;
      return fqlr_quantile(q, omega, req.dof, req.gaussian_limit, cfg);
    }
  }
  throw DomainError("critical_value: unknown method");
}

}  // namespace pcs
