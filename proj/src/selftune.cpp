#include "rrr/selftune.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace rrr {

std::string variant_name(TuneVariant v) {
  switch (v) {
    case TuneVariant::kStrs:
      return "STRS";
    case TuneVariant::kSstrs:
      return "SSTRS";
    case TuneVariant::kDb:
      return "STRS-DB";
  }
  return "?";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Update {
  double lambda = 0.0;
  double R = 0.0;
  double U = 0.0;
};

// Cap so that nm - lambda * k >= 1 for every admitted k.
int cap_at(double nm, double lambda, int N) {
  const double by_lambda = std::floor((nm - 1.0) / lambda);
  if (by_lambda < 0.0) return 0;
  return static_cast<int>(std::min<double>(by_lambda, N));
}

// Smallest argmin of res[k] / (nm - lambda k) over lo..hi.
int argmin_rank(const std::vector<double>& res, double nm, double lambda,
                int lo, int hi) {
  int best = lo;
  double best_val = res[static_cast<size_t>(lo)] / (nm - lambda * lo);
  for (int k = lo + 1; k <= hi; ++k) {
    const double val = res[static_cast<size_t>(k)] / (nm - lambda * k);
    if (val < best_val) {
      best = k;
      best_val = val;
    }
  }
  return best;
}

// Shared iteration: start at lambda0, select, update lambda from the
// selected rank, stop when the rank repeats (or cannot move).
SelfTuneTrace run_iteration(TuneVariant variant, const Vector& d_sq,
                            double resid_sq, int n, int m, double eps,
                            double lambda0,
                            const std::function<Update(int)>& update_at) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("self-tune: eps must lie in (0, 1)");
  }
  if (n <= 0 || m <= 0) {
    throw std::invalid_argument("self-tune: n and m must be positive");
  }
  const int N = static_cast<int>(d_sq.size());
  const double nm = static_cast<double>(n) * m;

  // Residual-by-rank table: res[k] = resid_sq + sum_{j > k} d_sq[j].
  std::vector<double> res(static_cast<size_t>(N) + 1);
  res[static_cast<size_t>(N)] = resid_sq;
  for (int k = N - 1; k >= 0; --k) res[static_cast<size_t>(k)] = res[k + 1] + d_sq(k);

  SelfTuneTrace trace;
  trace.variant = variant;
  trace.epsilon = eps;
  trace.N = N;

  double lambda = lambda0;
  int K = cap_at(nm, lambda, N);
  int k = argmin_rank(res, nm, lambda, 0, K);
  trace.steps.push_back({0, lambda, K, kNaN, kNaN, k});
  if (k == 0) {
    trace.converged = true;
    return trace;
  }

  for (int t = 1; t <= N + 1; ++t) {
    const Update u = update_at(k);
    if (!(u.lambda < lambda)) {
      // No progress possible. Equal lambda would re-select the same rank;
      // a larger one only arises in degenerate corners of the bounds.
      trace.converged = (u.lambda == lambda);
      trace.capped = !(u.lambda == lambda);
      return trace;
    }
    const int K_next = cap_at(nm, u.lambda, N);
    if (K_next < k) {
      trace.capped = true;  // admissible range no longer reaches k
      return trace;
    }
    const int k_next = argmin_rank(res, nm, u.lambda, k, K_next);
    trace.steps.push_back({t, u.lambda, K_next, u.R, u.U, k_next});
    lambda = u.lambda;
    K = K_next;
    if (k_next == k) {
      trace.converged = true;
      return trace;
    }
    k = k_next;
  }
  // Unreachable: k strictly increases and is bounded by N.
  throw std::logic_error("self-tune: iteration failed to terminate");
}

}  // namespace

std::string trace_violation(const SelfTuneTrace& trace) {
  if (trace.steps.empty()) return "empty trace";
  if (trace.step_count() > trace.N + 1) return "more than N+1 steps";
  if (!trace.converged && !trace.capped) return "no terminal stop recorded";
  for (int i = 0; i < trace.step_count(); ++i) {
    const TuneStep& s = trace.steps[static_cast<size_t>(i)];
    if (s.t != i) return "non-contiguous step indices";
    if (s.k < 0 || s.k > s.K) return "selected rank outside [0, K]";
    if (i > 0) {
      const TuneStep& p = trace.steps[static_cast<size_t>(i) - 1];
      if (!(s.lambda < p.lambda)) return "lambda not strictly decreasing";
      if (s.k < p.k) return "rank decreased";
    }
  }
  return "";
}

SelfTuneTrace strs_from_spectrum(const Vector& d_sq, double resid_sq, int n,
                                 int m, const SingularMoments& moments,
                                 double eps) {
  const int N = static_cast<int>(d_sq.size());
  if (moments.m != m || moments.N() != N ||
      N != std::min(moments.q, moments.m)) {
    throw ShapeError("strs: moments table is shaped for (q,m) = (" +
                     std::to_string(moments.q) + "," +
                     std::to_string(moments.m) + "), spectrum has " +
                     std::to_string(N) + " values for m = " +
                     std::to_string(m));
  }
  const int q = moments.q;
  const double nm = static_cast<double>(n) * m;
  const double S1 = moments.at(1);
  const double lambda0 = 2.0 * (1.0 + eps) * S1;
  auto update = [&, q](int k) {
    Update u;
    u.R = static_cast<double>(n - q) * m + moments.tail_sum(2 * k + 1);
    u.U = std::max(S1, moments.at(2 * k + 1) + moments.at(2 * k + 2));
    u.lambda = nm / ((1.0 - eps) * u.R / u.U + k);
    return u;
  };
  return run_iteration(TuneVariant::kStrs, d_sq, resid_sq, n, m, eps, lambda0,
                       update);
}

SelfTuneTrace sstrs_from_spectrum(const Vector& d_sq, int n, int m, int q,
                                  double eps) {
  const int N_full = static_cast<int>(d_sq.size());
  if (N_full != std::min(n, m)) {
    throw ShapeError("sstrs: spectrum has " + std::to_string(N_full) +
                     " values, expected n ∧ m = " +
                     std::to_string(std::min(n, m)));
  }
  if (q <= 0 || q > n) {
    throw std::invalid_argument("sstrs: q must lie in 1..n");
  }
  // Only the leading q ∧ m singular values are candidates; anything beyond
  // is noise mass that stays in the residual for every admitted rank.
  const int N = std::min(q, m);
  const Vector head = d_sq.head(N);
  double resid_sq = 0.0;
  for (int j = N; j < N_full; ++j) resid_sq += d_sq(j);
  const double nm = static_cast<double>(n) * m;
  const double lambda0 = 2.0 * (1.0 + eps) * std::max(m, q);
  const double half_N = 0.5 * N;
  auto update = [=](int k) {
    Update u;
    u.R = std::max(half_N - k, 0.0);
    u.U = 1.0;
    u.lambda = nm / ((1.0 - eps) * u.R + k);
    return u;
  };
  return run_iteration(TuneVariant::kSstrs, head, resid_sq, n, m, eps,
                       lambda0, update);
}

SelfTuneTrace sstrs_from_spectrum(const Vector& d_sq, int n, int m,
                                  double eps) {
  // Without a design matrix the row count plays the role of q.
  return sstrs_from_spectrum(d_sq, n, m, /*q=*/n, eps);
}

namespace {

// Data-free deterministic bounds for the DB update at plugged-in rank k.
Update db_update_at(int n, int m, int q, double eps, int k) {
  const int N = std::min(q, m);
  const double nm = static_cast<double>(n) * m;
  const double M = std::max(q, m);
  const double sqrt_sum =
      std::sqrt(static_cast<double>(m)) + std::sqrt(static_cast<double>(q));
  const double edge_sq = sqrt_sum * sqrt_sum;  // (sqrt m + sqrt q)^2
  auto upper_term = [&](int j) {
    // (sqrt(M) + sqrt(N - j + 1))^2; the argument stays >= 0 for j <= N+1.
    const double s = std::sqrt(M) + std::sqrt(static_cast<double>(N - j + 1));
    return s * s;
  };
  Update u;
  if (2 * k < N) {
    double head = 0.0;
    for (int j = 1; j <= 2 * k; ++j) head += upper_term(j);
    const double r_a = nm - head - 2.0 * k;
    double tail = 0.0;
    for (int j = 2 * k + 1; j <= N; ++j) {
      const double s = std::sqrt(M) - std::sqrt(static_cast<double>(j));
      tail += s * s;
    }
    const double r_b = static_cast<double>(n - q) * m + tail;
    u.R = std::max(r_a, r_b);
    u.U = std::max(edge_sq + 1.0,
                   upper_term(2 * k + 1) + upper_term(2 * k + 2) + 2.0);
  } else {
    u.R = static_cast<double>(n - q) * m;
    u.U = edge_sq + 1.0;
  }
  u.lambda = nm / ((1.0 - eps) * u.R / u.U + k);
  return u;
}

}  // namespace

double db_lambda_update(int n, int m, int q, double eps, int k) {
  return db_update_at(n, m, q, eps, k).lambda;
}

SelfTuneTrace strs_db_from_spectrum(const Vector& d_sq, double resid_sq,
                                    int n, int m, int q, double eps) {
  const int N = static_cast<int>(d_sq.size());
  if (N != std::min(q, m)) {
    throw ShapeError("strs_db: spectrum has " + std::to_string(N) +
                     " values, expected q ∧ m = " +
                     std::to_string(std::min(q, m)));
  }
  const double edge_sq =
      std::pow(std::sqrt(static_cast<double>(m)) +
                   std::sqrt(static_cast<double>(q)),
               2.0);
  const double lambda0 = 2.0 * (1.0 + eps) * edge_sq;
  auto update = [=](int k) { return db_update_at(n, m, q, eps, k); };
  return run_iteration(TuneVariant::kDb, d_sq, resid_sq, n, m, eps, lambda0,
                       update);
}

namespace {

Vector squared_spectrum(const Matrix& Y, const ProjectionOp& P,
                        double* resid_sq) {
  const Matrix coords = P.coords(Y);
  const Vector d = singular_values(coords);
  *resid_sq = (Y - P.basis * coords).squaredNorm();
  return d.array().square().matrix();
}

}  // namespace

SelfTuneTrace strs(const Matrix& Y, const ProjectionOp& P,
                   const SingularMoments& moments, double eps) {
  double resid_sq = 0.0;
  const Vector d_sq = squared_spectrum(Y, P, &resid_sq);
  return strs_from_spectrum(d_sq, resid_sq, static_cast<int>(Y.rows()),
                            static_cast<int>(Y.cols()), moments, eps);
}

SelfTuneTrace sstrs(const Matrix& Y, double eps) {
  return sstrs(Y, static_cast<int>(Y.rows()), eps);
}

SelfTuneTrace sstrs(const Matrix& Y, int q, double eps) {
  const Vector d = singular_values(Y);
  return sstrs_from_spectrum(d.array().square().matrix(),
                             static_cast<int>(Y.rows()),
                             static_cast<int>(Y.cols()), q, eps);
}

SelfTuneTrace strs_db(const Matrix& Y, const ProjectionOp& P, double eps) {
  double resid_sq = 0.0;
  const Vector d_sq = squared_spectrum(Y, P, &resid_sq);
  return strs_db_from_spectrum(d_sq, resid_sq, static_cast<int>(Y.rows()),
                               static_cast<int>(Y.cols()), P.rank_q, eps);
}

}  // namespace rrr
