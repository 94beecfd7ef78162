#include "rrr/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rrr {

namespace {

void check_inputs(const CriterionInputs& in) {
  if (in.n <= 0 || in.m <= 0) {
    throw std::invalid_argument("criterion: n and m must be positive");
  }
  if (!(in.lambda > 0.0)) {
    throw std::invalid_argument("criterion: lambda must be positive");
  }
  if (in.resid_sq < 0.0) {
    throw std::invalid_argument("criterion: negative residual");
  }
  for (Eigen::Index j = 0; j < in.d_sq.size(); ++j) {
    if (in.d_sq(j) < 0.0 ||
        (j > 0 && in.d_sq(j) > in.d_sq(j - 1) * (1.0 + 1e-12) + 1e-300)) {
      throw std::invalid_argument(
          "criterion: d_sq must be nonnegative and nonincreasing");
    }
  }
}

// ||Y - (PY)_k||^2 for k = 0..N via suffix sums of the squared spectrum.
// Summing small-to-large keeps the tails accurate.
std::vector<double> residual_sq_by_rank(const Vector& d_sq, double resid_sq) {
  const int N = static_cast<int>(d_sq.size());
  std::vector<double> res(static_cast<size_t>(N) + 1);
  res[N] = resid_sq;
  for (int k = N - 1; k >= 0; --k) res[k] = res[k + 1] + d_sq(k);
  return res;
}

}  // namespace

int k_cap(int n, int m, int q, double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("k_cap: lambda must be positive");
  }
  const double nm = static_cast<double>(n) * m;
  const double by_lambda = std::floor((nm - 1.0) / lambda);
  long K = by_lambda < 0.0 ? 0 : static_cast<long>(by_lambda);
  K = std::min<long>(K, std::min(m, q));
  return static_cast<int>(std::max<long>(K, 0));
}

std::vector<double> criterion_trace(const CriterionInputs& in) {
  check_inputs(in);
  const int N = static_cast<int>(in.d_sq.size());
  const double nm = static_cast<double>(in.n) * in.m;
  const int K = k_cap(in.n, in.m, N, in.lambda);
  const auto res = residual_sq_by_rank(in.d_sq, in.resid_sq);
  std::vector<double> trace(static_cast<size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) trace[k] = res[k] / (nm - in.lambda * k);
  return trace;
}

RankSelection select_rank(const CriterionInputs& in) {
  RankSelection sel;
  sel.sigma_sq_trace = criterion_trace(in);
  sel.K = static_cast<int>(sel.sigma_sq_trace.size()) - 1;
  sel.lambda = in.lambda;

  int best = 0;
  for (int k = 1; k <= sel.K; ++k) {
    if (sel.sigma_sq_trace[k] < sel.sigma_sq_trace[best]) best = k;
  }
  sel.k_hat = best;

  // Threshold count: #{ k : d_k^2 >= lambda sigma_k^2 }. Agrees with the
  // argmin except on exact ties, where >= counts the tied index but the
  // smallest-argmin rule does not.
  int count = 0;
  for (int k = 1; k <= sel.K; ++k) {
    if (in.d_sq(k - 1) >= in.lambda * sel.sigma_sq_trace[k]) ++count;
  }
  sel.count_form = count;
  sel.degenerate = (count != sel.k_hat);
  return sel;
}

double sigma_r_hat_sq(const CriterionInputs& in, int r) {
  check_inputs(in);
  const int N = static_cast<int>(in.d_sq.size());
  const int K = k_cap(in.n, in.m, N, in.lambda);
  if (r < 0 || r > K) {
    throw RankOutOfRange("sigma_r_hat_sq: r = " + std::to_string(r) +
                         " outside [0, " + std::to_string(K) + "]");
  }
  const auto res = residual_sq_by_rank(in.d_sq, in.resid_sq);
  const double nm = static_cast<double>(in.n) * in.m;
  return res[r] / (nm - in.lambda * r);
}

int max_admissible_rank(int n, int m, int q, double lambda, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("max_admissible_rank: delta must be positive");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("max_admissible_rank: lambda must be positive");
  }
  const double nm = static_cast<double>(n) * m;
  const double bound = delta / (1.0 + delta) * nm / lambda;
  // Strictness binds on the continuous bound only (exact integers step
  // down); the dimension caps are inclusive since r = m ∧ q is a valid rank.
  double strict = std::ceil(bound) - 1.0;
  if (strict < 0.0) strict = 0.0;
  return std::min(static_cast<int>(strict), std::min(m, q));
}

DiagnosticsReport diagnostics(const CriterionInputs& in, int r, double delta) {
  DiagnosticsReport rep;
  const int N = static_cast<int>(in.d_sq.size());
  rep.K_lambda = k_cap(in.n, in.m, N, in.lambda);
  const double nm = static_cast<double>(in.n) * in.m;
  rep.rho = nm / (nm - in.lambda * rep.K_lambda);
  rep.max_admissible_rank = max_admissible_rank(in.n, in.m, N, in.lambda, delta);
  rep.sigma_r_hat_sq = sigma_r_hat_sq(in, r);
  return rep;
}

OracleReport oracle_bounds(const Matrix& Y, const ProjectionOp& P,
                           const Matrix& XA, int k_hat, int r, double lambda) {
  if (Y.rows() != XA.rows() || Y.cols() != XA.cols()) {
    throw ShapeError("oracle_bounds: Y and XA shapes differ");
  }
  const int n = static_cast<int>(Y.rows());
  const int m = static_cast<int>(Y.cols());
  const double nm = static_cast<double>(n) * m;

  // Spectra of PY and PE from the q x m coordinate matrices.
  const Matrix BtY = P.coords(Y);
  const SvdFactors FY = svd(BtY);
  const Matrix E = Y - XA;
  const Vector dPE = singular_values(P.coords(E));
  const double d1_PE_sq = dPE.size() > 0 ? dPE(0) * dPE(0) : 0.0;

  // Fitted mean at k_hat, lifted back to n x m.
  const Matrix fit = P.basis * FY.truncate(k_hat);

  OracleReport rep;
  rep.lhs = (fit - XA).squaredNorm();
  rep.rhs_exact = 4.0 * static_cast<double>(r) * d1_PE_sq;
  rep.exact_applicable = (k_hat == r);
  rep.exact_holds = rep.lhs <= rep.rhs_exact * (1.0 + 1e-12) + 1e-12;

  // General bound with the data-determined constant
  // C = lambda sigma_hat^2 / d_1^2(PE), the largest C whose event holds.
  CriterionInputs in;
  in.d_sq = FY.d.array().square().matrix();
  in.resid_sq = (Y - P.apply(Y)).squaredNorm();
  in.n = n;
  in.m = m;
  in.lambda = lambda;
  const RankSelection sel = select_rank(in);
  const double sigma_hat_sq = sel.sigma_sq_trace[sel.k_hat];
  rep.C = d1_PE_sq > 0.0 ? lambda * sigma_hat_sq / d1_PE_sq
                         : std::numeric_limits<double>::infinity();
  rep.rho = nm / (nm - lambda * sel.K);
  rep.general_event_held = rep.C > 2.0;

  if (rep.general_event_held && std::isfinite(rep.C)) {
    const double c_fac = (rep.C + 2.0) / (rep.C - 2.0);
    const Vector dXA = singular_values(P.coords(XA));
    // Suffix sums of d_j^2(XA) over j > k.
    const int N = static_cast<int>(dXA.size());
    std::vector<double> tail(static_cast<size_t>(N) + 1, 0.0);
    for (int j = N - 1; j >= 0; --j) tail[j] = tail[j + 1] + dXA(j) * dXA(j);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= sel.K; ++k) {
      const double t = k <= N ? tail[k] : 0.0;
      const double val = (c_fac + 8.0 * (rep.rho - 1.0)) * t +
                         3.0 * rep.rho * lambda * sigma_hat_sq * k;
      best = std::min(best, val);
    }
    rep.rhs_general = c_fac * best;
    rep.general_holds = rep.lhs <= rep.rhs_general * (1.0 + 1e-12) + 1e-12;
  }
  return rep;
}

}  // namespace rrr
