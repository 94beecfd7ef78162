#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rrr/linalg.hpp"
#include "rrr/rng.hpp"

namespace rrr {

// Monte-Carlo table of S_j = E[d_j^2(Z)] for Z a q x m matrix of i.i.d.
// standard normals, j = 1..N with N = q ∧ m. These constants drive the
// self-tuning lambda updates; by convention S_j = 0 beyond N.
struct SingularMoments {
  int q = 0;
  int m = 0;
  std::vector<double> S;  // S_1 >= S_2 >= ... >= S_N >= 0
  long mc_draws = 0;
  std::uint64_t seed = 0;

  int N() const { return static_cast<int>(S.size()); }

  // 1-based lookup, zero beyond N.
  double at(int j) const {
    return (j >= 1 && j <= N()) ? S[static_cast<size_t>(j) - 1] : 0.0;
  }

  // sum_{j >= lo} S_j, zero when lo > N.
  double tail_sum(int lo) const;
};

SingularMoments estimate_moments(int q, int m, long mc_draws,
                                 std::uint64_t seed);

// CSV round-trip: header "q,m,j,S_j,mc_draws,seed", one row per j, values
// in shortest exact decimal form.
void save_moments_csv(const std::string& path, const SingularMoments& S);
SingularMoments load_moments_csv(const std::string& path);

// Cache directory: the RRR_MOMENTS_CACHE environment variable when set,
// otherwise empty (caching disabled).
std::string moments_cache_dir();

// Consults the cache dir (if any) before estimating; saves after a miss.
SingularMoments load_or_estimate_moments(int q, int m, long mc_draws,
                                         std::uint64_t seed);

}  // namespace rrr
