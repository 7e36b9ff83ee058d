#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcs/confidence.hpp"
#include "pcs/core.hpp"

namespace pcs {

struct MethodResults {
  Method method = Method::SNS;
  JointConfidenceSet cs;
  PValueReport pvals;
};

// JSON report with stable key order and shortest round-trip numbers, so
// identical runs serialize byte-for-byte; group labels are 1-based
std::string render_report(const PanelDataset& panel, const GroupModel& model,
                          const std::vector<MethodResults>& results, double alpha,
                          double beta, double epsilon, std::uint64_t seed);

}  // namespace pcs
