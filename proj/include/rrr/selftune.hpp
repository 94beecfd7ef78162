#pragma once

#include <string>
#include <vector>

#include "rrr/linalg.hpp"
#include "rrr/moments.hpp"

namespace rrr {

// Iterative self-tuning of the criterion's lambda. Each variant starts from
// a conservative lambda_0, selects a rank, and feeds that rank back into a
// smaller lambda until the selected rank stops changing. Variants differ
// only in how the feasible signal/noise split (R_t, U_t) is bounded:
//
//   kStrs  - Monte-Carlo singular moments S_j of a q x m Gaussian matrix;
//   kSstrs - closed-form bounds 2(1+eps)(m ∨ q) and (m ∧ q)/2, for data
//            without a design matrix (Y = A + E);
//   kDb    - deterministic bounds (sqrt(M) ± sqrt(j))^2 in place of the
//            Monte-Carlo moments.

enum class TuneVariant { kStrs, kSstrs, kDb };

std::string variant_name(TuneVariant v);

struct TuneStep {
  int t = 0;          // iteration index, 0 = initial lambda
  double lambda = 0;  // lambda used at this step
  int K = 0;          // admissible-rank cap at this lambda
  double R = 0;       // residual bound fed into the update (NaN at t = 0)
  double U = 0;       // top-spectrum bound fed into the update (NaN at t = 0)
  int k = 0;          // rank selected at this step
};

struct SelfTuneTrace {
  TuneVariant variant = TuneVariant::kStrs;
  double epsilon = 0.0;
  int N = 0;  // number of candidate ranks (q ∧ m)
  std::vector<TuneStep> steps;
  // Stopped because the selected rank repeated (or was 0 at the start).
  bool converged = false;
  // Stopped because the next lambda failed to decrease or its admissible
  // range no longer contained the current rank; the last recorded step is
  // the answer. Occurs only in degenerate corners (e.g. zero residual
  // bound when n = q and 2k reaches N).
  bool capped = false;

  int k_final() const { return steps.back().k; }
  double lambda_final() const { return steps.back().lambda; }
  int step_count() const { return static_cast<int>(steps.size()); }
};

// Empty string when the trace satisfies every structural invariant
// (contiguous t, strictly decreasing lambda, nondecreasing k, k <= K per
// step, step count <= N + 1, a terminal stop); otherwise a description of
// the first violation.
std::string trace_violation(const SelfTuneTrace& trace);

// Spectrum-level selectors: d_sq holds the squared singular values of the
// projected data (j = 1..N) and resid_sq the off-space residual norm^2.

// Monte-Carlo variant; moments must be shaped for this problem
// (moments.m == m and N == moments.q ∧ m), else ShapeError.
SelfTuneTrace strs_from_spectrum(const Vector& d_sq, double resid_sq, int n,
                                 int m, const SingularMoments& moments,
                                 double eps);

// Simplified variant on the raw spectrum of Y (all q ∧ n ∧ m values of the
// data matrix itself, no projection). q is the design rank when Y came from
// a regression with n close to q; without a design the role of q is played
// by the row count n (the overload's default).
SelfTuneTrace sstrs_from_spectrum(const Vector& d_sq, int n, int m, int q,
                                  double eps);
SelfTuneTrace sstrs_from_spectrum(const Vector& d_sq, int n, int m,
                                  double eps);

// Deterministic-bounds variant.
SelfTuneTrace strs_db_from_spectrum(const Vector& d_sq, double resid_sq,
                                    int n, int m, int q, double eps);

// The deterministic variant's lambda update as a function of the plugged-in
// rank alone (it never looks at data): nm / ((1-eps) R(k)/U(k) + k).
// Nonincreasing in k over 1..floor(N/2), which is what makes the iteration
// well-defined.
double db_lambda_update(int n, int m, int q, double eps, int k);

// Matrix-level conveniences (one SVD of the q x m coordinates).
SelfTuneTrace strs(const Matrix& Y, const ProjectionOp& P,
                   const SingularMoments& moments, double eps);
SelfTuneTrace sstrs(const Matrix& Y, double eps);
SelfTuneTrace sstrs(const Matrix& Y, int q, double eps);
SelfTuneTrace strs_db(const Matrix& Y, const ProjectionOp& P, double eps);

}  // namespace rrr
