#pragma once

#include <cstdint>
#include <vector>

#include "rrr/linalg.hpp"
#include "rrr/moments.hpp"

namespace rrr {

// Comparator selectors: a fixed-threshold count on the spectrum of PY with
// a plug-in variance estimate, and a self-normalized ratio criterion whose
// penalty is a Monte-Carlo norm table. Both serve as baselines against the
// adaptive selectors.

// Residual variance estimate ||Y - PY||^2 / ((n - q) m). Undefined when
// n = q (no residual degrees of freedom) -> InfeasibleVarianceEstimate.
double sigma_tilde_sq(double resid_sq, int n, int q, int m);
double sigma_tilde_sq(const Matrix& Y, const ProjectionOp& P);

struct BswConfig {
  double C = 1.1;
  enum class MuMode {
    kMcExpectedD1Sq,  // mu = C * E[d_1^2(Z)] * sigma_tilde^2 (default)
    kDeterministic,   // mu = C * (m + q) * sigma_tilde^2
  } mu_mode = MuMode::kMcExpectedD1Sq;
};

// Threshold mu for the given configuration; the MC mode reads E[d_1^2(Z)]
// from the supplied moments table.
double bsw_mu(const BswConfig& cfg, int m, int q, double sigma_tilde_sq,
              const SingularMoments* moments);

// #{ k : d_k^2(PY) >= mu }. Equals the argmin of
// ||Y - (PY)_k||^2 + mu k over k.
int bsw_select(const Vector& d_sq, double mu);

struct KfConfig {
  double C = 2.0;
  // (E ||G||_{(2,k)})^2 for k = 1..N, G a q x m standard Gaussian matrix and
  // ||G||_{(2,k)}^2 = sum_{i<=k} d_i^2(G). Nondecreasing in k.
  std::vector<double> g_norm_sq;
  int q = 0;
  int m = 0;
  long mc_draws = 0;
  std::uint64_t seed = 0;

  double g_sq_at(int k) const {  // 1-based; 0 at k = 0
    return k <= 0 ? 0.0 : g_norm_sq[static_cast<size_t>(k) - 1];
  }
};

// Monte-Carlo table of E ||G||_{(2,k)} (mean of the norm, then squared).
// Consults the same cache directory as the singular-moment tables.
KfConfig estimate_g_norms(int q, int m, long mc_draws, std::uint64_t seed,
                          double C = 2.0);

// Smallest argmin of ||Y - (PY)_k||^2 / (nm - 1 - C g_sq[k]) over the k
// where the denominator is >= 1. Throws NoAdmissibleRank if no k qualifies.
int kf_select(const Vector& d_sq, double resid_sq, int n, int m,
              const KfConfig& cfg);

}  // namespace rrr
