#pragma once

#include <string>

#include "pcs/core.hpp"

namespace pcs {

// Column names expected in a panel CSV. Covariate columns are
// <covariate_prefix>1 .. <covariate_prefix>K, contiguous from 1.
struct PanelSchema {
  std::string unit = "unit";
  std::string time = "time";
  std::string outcome = "y";
  std::string covariate_prefix = "x";
};

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

// Reads a long-format panel CSV (header required, rows in any order) and
// assembles the balanced (i,t) grid. Units and periods are ordered
// numerically when every label parses as a number, lexicographically
// otherwise.
// Throws ParseError, MissingCell, DuplicateCell, NonFinite.
PanelDataset load_panel(const std::string& path, const PanelSchema& schema = {});

// Writes a panel CSV in internal order; load(save(p)) reproduces p exactly.
void save_panel(const std::string& path, const PanelDataset& panel,
                const PanelSchema& schema = {});

// Coefficients CSV with header group,time,k,value. Group and k are 1-based;
// time is a 1-based period position or '*' for time-constant rows. n_periods
// fixes T when expanding '*' and bounds explicit time values.
// Throws ParseError, MissingCell, DuplicateCell, NonFinite.
GroupModel load_coefficients(const std::string& path, int n_periods);
void save_coefficients(const std::string& path, const GroupModel& model);

// Assignment CSV with header unit,group (1-based groups).
void save_assignment(const std::string& path, const PanelDataset& panel,
                     const GroupModel& model);

}  // namespace pcs
