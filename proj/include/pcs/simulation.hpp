#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcs/confidence.hpp"
#include "pcs/core.hpp"
#include "pcs/critical.hpp"
#include "pcs/qmc.hpp"

namespace pcs {

enum class DesignKind { homoscedastic_A, homoscedastic_B, heteroscedastic_2G };

const char* design_name(DesignKind kind);
DesignKind design_from_string(const std::string& name);

struct DesignSpec {
  DesignKind kind = DesignKind::homoscedastic_A;
  int n_units = 50;
  int n_periods = 40;
  double sigma = 0.5;
  int g0 = 1;                    // true group label (1-based), designs A and B
  double high_noise_prob = 0.5;  // heteroscedastic design only
  std::uint64_t seed = 0;
};

struct DesignDraw {
  PanelDataset panel;
  GroupModel model;             // true coefficients and true assignment
  std::vector<int> noise_type;  // heteroscedastic: 1 for high noise; else empty
};

DesignDraw make_design(const DesignSpec& spec);

struct CoverageRow {
  std::string design;
  Method method = Method::SNS;
  double alpha = 0.1;
  double beta = 0.0;
  int n_periods = 0;
  double sigma = 0.0;
  int reps = 0;
  double coverage = 0.0;        // joint confidence set covers the truth
  double coverage_se = 0.0;
  double cardinality = 0.0;     // mean unit-wise set size
  double naive_coverage = 0.0;  // estimated assignment equals the truth
  double naive_se = 0.0;
  double power = 0.0;           // singleton rate for high-noise units (het only)
  double power_se = 0.0;
  double nhat_frac = 0.0;       // mean selected fraction
};

struct CoverageTable {
  std::vector<CoverageRow> rows;
};

// Monte Carlo study with replication seeds derived from master_seed; the
// true coefficients are treated as known and only the assignment is estimated
CoverageTable run_study(const DesignSpec& spec, const std::vector<Method>& methods,
                        double alpha, double beta, int reps,
                        std::uint64_t master_seed, const QmcConfig& qmc,
                        const InferenceOptions& opts = {});

void save_coverage_csv(const std::string& path, const CoverageTable& table);

}  // namespace pcs
