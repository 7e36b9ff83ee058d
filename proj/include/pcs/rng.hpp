#pragma once

#include <cstdint>

namespace pcs {

// splitmix64 (Steele/Lea/Flood mixing constants). Small state, O(1) seeding,
// and trivially counter-splittable, which is what keeps replication streams
// independent of the thread schedule.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform on the open interval (0,1); never returns an exact endpoint so
  // inverse-CDF transforms stay finite.
  double uniform01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
};

// Derives a child seed from (master, counter). Used for per-replication and
// per-restart streams: stream identity depends only on the counter, not on
// which thread happens to run it.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t counter) {
  SplitMix64 g(master ^ (counter * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
  g.next();
  return g.next();
}

}  // namespace pcs
