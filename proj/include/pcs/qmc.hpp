#pragma once

#include <cstdint>
#include <vector>

namespace pcs {

// Budget for randomized quasi-Monte Carlo integration. The same config always
// produces the same point set, so every estimate in the library is a pure
// function of its inputs.
struct QmcConfig {
  int n_points = 4096;
  int n_randomizations = 12;
  std::uint64_t seed = 0;
};

// Rank-1 lattice rule in Korobov form z_j = a^(j-1) mod n with a random shift
// per randomization. Multipliers were selected offline by minimizing the
// weighted P_2 criterion (product weights 1/j^2) for dimensions up to 20;
// n_points rounds up to the nearest tabulated power of two.
struct LatticeRule {
  int n = 0;
  std::vector<std::uint64_t> z;  // generating vector, one entry per dimension

  LatticeRule(int n_points, int dim);

  // Fills pt with the k-th shifted point, all coordinates in [0,1).
  void point(int k, const std::vector<double>& shift, std::vector<double>& pt) const;
};

// Random shift for randomization index r, derived from (seed, r) only.
std::vector<double> qmc_shift(const QmcConfig& cfg, int r, int dim);

}  // namespace pcs
