#pragma once

#include <Eigen/Dense>
#include <string>

#include "pcs/qmc.hpp"

namespace pcs {

enum class Method { SNS, MAX, QLR };

const char* method_name(Method m);
Method method_from_string(const std::string& s);

struct CriticalValueRequest {
  Method method = Method::SNS;
  double alpha = 0.1;
  int n_eff = 1;        // number of units the level is spread over
  int groups = 2;       // G
  double dof = 1.0;     // T - 1
  Eigen::MatrixXd omega;  // (G-1)x(G-1) scale; empty means identity
  bool gaussian_limit = false;
};

// Per-unit critical value for the hypothesis that one candidate group is the
// unit's true group, at joint level alpha spread over n_eff units.
double critical_value(const CriticalValueRequest& req, const QmcConfig& cfg);

}  // namespace pcs
