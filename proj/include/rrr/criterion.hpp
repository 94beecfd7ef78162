#pragma once

#include <vector>

#include "rrr/linalg.hpp"

namespace rrr {

// Rank selection by minimizing
//
//     sigma_k^2 = ||Y - (PY)_k||^2 / (nm - lambda k),   k = 0..K,
//
// where P projects onto the column space of the design and K caps k so the
// denominator stays positive. Everything here consumes the squared spectrum
// of PY plus the off-column-space residual, so one SVD serves all k.

struct CriterionInputs {
  Vector d_sq;      // d_j^2(PY), j = 1..N, nonincreasing
  double resid_sq;  // ||Y - PY||^2
  int n = 0;        // rows of Y
  int m = 0;        // cols of Y
  double lambda = 0.0;
};

// Largest admissible rank: floor((nm-1)/lambda) ∧ m ∧ q. Keeps
// nm - lambda*k >= 1 on 0..K.
int k_cap(int n, int m, int q, double lambda);

// The trace sigma_k^2 for k = 0..K; sigma_0^2 = ||Y||^2/(nm).
std::vector<double> criterion_trace(const CriterionInputs& in);

struct RankSelection {
  int k_hat = 0;                      // smallest argmin of the trace
  std::vector<double> sigma_sq_trace; // sigma_k^2, k = 0..K
  int K = 0;
  double lambda = 0.0;
  int count_form = 0;   // #{k in 1..K : d_k^2 >= lambda sigma_k^2}
  bool degenerate = false;  // count_form != k_hat (exact ties only)
};

// Minimizes the criterion. k_hat is the smallest argmin; count_form is the
// closed-form threshold count, which matches k_hat except on exact-tie
// inputs (flagged degenerate rather than rejected).
RankSelection select_rank(const CriterionInputs& in);

// sigma_r^2 for a single rank r <= K; throws RankOutOfRange otherwise.
double sigma_r_hat_sq(const CriterionInputs& in, int r);

// Largest integer r with r < delta/(1+delta) * nm/lambda ∧ m ∧ q; such r
// keep the variance inflation nm/(nm - lambda r) within 1+delta.
int max_admissible_rank(int n, int m, int q, double lambda, double delta);

// Diagnostic bundle for a given (n, m, q, lambda).
struct DiagnosticsReport {
  int K_lambda = 0;
  double rho = 1.0;              // nm / (nm - lambda K)
  int max_admissible_rank = 0;   // at the supplied delta
  double sigma_r_hat_sq = 0.0;   // at the supplied r
};

DiagnosticsReport diagnostics(const CriterionInputs& in, int r, double delta);

// Error bounds for the fitted mean (PY)_{k_hat} against a known truth XA:
//   lhs        = ||(PY)_{k_hat} - XA||^2
//   rhs_exact  = 4 r d_1^2(PE), valid whenever k_hat = r
//   rhs_general: oracle bound with data-determined constant
//                C = lambda sigma_hat^2 / d_1^2(PE); meaningful when C > 2.
struct OracleReport {
  double lhs = 0.0;
  double rhs_exact = 0.0;
  bool exact_applicable = false;  // k_hat == r
  bool exact_holds = false;
  double C = 0.0;
  double rho = 1.0;
  double rhs_general = 0.0;
  bool general_event_held = false;  // C > 2
  bool general_holds = false;
};

OracleReport oracle_bounds(const Matrix& Y, const ProjectionOp& P,
                           const Matrix& XA, int k_hat, int r, double lambda);

}  // namespace rrr
