#pragma once

#include <vector>

#include "pcs/core.hpp"
#include "pcs/critical.hpp"
#include "pcs/moments.hpp"
#include "pcs/qmc.hpp"

namespace pcs {

struct InferenceOptions {
  double epsilon = 0.012;      // omega regularization
  bool jackknife = false;      // half-panel jackknife blocks on the raw panel
  bool gaussian_limit = false; // normal / chi-square reference distributions
  int threads = 1;
};

struct UnitConfidenceSet {
  int unit = 0;
  std::vector<int> groups;  // ascending, 0-based, nonempty, contains ghat
  Method method = Method::SNS;
  double alpha_level = 0.0;  // per-unit miss budget alpha/n_eff
};

struct SelectionStep {
  int s = 0;
  int n_hat = 0;  // N-hat(s)
};

// Product-structured joint confidence set: a configuration (g_1..g_N) is in
// the set iff g_i is in per_unit[i].groups for every i.
struct JointConfidenceSet {
  Method method = Method::SNS;
  double alpha = 0.0;
  double beta = 0.0;
  int n_selected = 0;  // final N-hat
  std::vector<UnitConfidenceSet> per_unit;
  std::vector<SelectionStep> iterations;  // unit-selection trace
  bool covers(const std::vector<int>& assignment) const;
};

struct PValueEntry {
  int unit = 0;
  int ghat = 0;
  double unitwise_p = 0.0;
  double joint_p = 0.0;  // n_selected * unitwise_p, not clamped to [0,1]
};

struct PValueReport {
  Method method = Method::SNS;
  int n_selected = 1;
  std::vector<PValueEntry> per_unit;
};

// Membership set for one unit at level alpha with n_eff = 1, always including
// the unit's estimated group. Model must carry an assignment.
UnitConfidenceSet unit_cs(const PanelDataset& panel, const GroupModel& model, int i,
                          double alpha, Method method, const QmcConfig& qmc,
                          const InferenceOptions& opts = {});

// Bonferroni joint set: per-unit sets at level alpha/N.
JointConfidenceSet joint_cs(const PanelDataset& panel, const GroupModel& model,
                            double alpha, Method method, const QmcConfig& qmc,
                            const InferenceOptions& opts = {});

// Iterative unit selection: replaces N by the count N-hat of units that are
// not obviously classified, at the cost of testing at level alpha - 2 beta.
// beta = 0 switches selection off and reproduces joint_cs.
// Throws InvalidBeta unless 0 <= beta < alpha/3, AssignmentViolation if the
// assignment does not minimize the least-squares criterion.
JointConfidenceSet unit_selection_cs(const PanelDataset& panel, const GroupModel& model,
                                     double alpha, double beta, Method method,
                                     const QmcConfig& qmc,
                                     const InferenceOptions& opts = {});

// Unit-wise and joint significance p-values for each unit's estimated group.
// Values are not clamped; anything >= 1 is insignificant at every level.
PValueReport pvalues(const PanelDataset& panel, const GroupModel& model, Method method,
                     int n_selected, const QmcConfig& qmc,
                     const InferenceOptions& opts = {});

// Units with joint_p < alpha.
std::vector<int> jointly_significant(const PValueReport& report, double alpha);

// Exact joint miss probability of N independent tests with miss alpha/N each,
// with the second-order bounds it must satisfy.
struct MissBounds {
  double lower = 0.0;
  double exact = 0.0;
  double upper = 0.0;
};
MissBounds bonferroni_miss_bounds(double alpha, int n);

}  // namespace pcs
