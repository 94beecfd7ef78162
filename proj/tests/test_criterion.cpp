#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rrr/criterion.hpp"
#include "rrr/rng.hpp"

using rrr::CriterionInputs;
using rrr::Matrix;
using rrr::Vector;

namespace {

Matrix randn(int rows, int cols, std::uint64_t seed) {
  rrr::RandomStream s(seed);
  Matrix M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = s.normal();
  return M;
}

// Builds criterion inputs from raw Y and design X the slow, explicit way.
CriterionInputs inputs_from(const Matrix& Y, const Matrix& X, double lambda) {
  const auto P = rrr::projection(X);
  CriterionInputs in;
  in.d_sq = rrr::singular_values(P.coords(Y)).array().square();
  in.resid_sq = rrr::fro_sq(Y - P.apply(Y));
  in.n = int(Y.rows());
  in.m = int(Y.cols());
  in.lambda = lambda;
  return in;
}

}  // namespace

TEST_CASE("k_cap evaluates floor((nm-1)/lambda) ∧ m ∧ q") {
  const double lam = 2.0 * std::pow(std::sqrt(50.0) + std::sqrt(30.0), 2.0);
  CHECK(lam == doctest::Approx(314.9).epsilon(1e-3));
  CHECK(rrr::k_cap(50, 50, 30, lam) == 7);

  CHECK(rrr::k_cap(150, 30, 20, 198.0) == 20);
  CHECK(rrr::k_cap(10, 10, 10, 99.0) == 1);
  CHECK(rrr::k_cap(10, 10, 10, 100.0) == 0);   // lambda >= nm-1 collapses
  CHECK(rrr::k_cap(10, 10, 10, 5000.0) == 0);
  CHECK_THROWS_AS(rrr::k_cap(10, 10, 10, 0.0), std::invalid_argument);
}

TEST_CASE("criterion trace equals an explicit per-k recomputation") {
  const Matrix X = randn(8, 3, 201);
  const Matrix Y = randn(8, 5, 202);
  const double lambda = 7.0;
  const auto in = inputs_from(Y, X, lambda);
  const auto trace = rrr::criterion_trace(in);

  const auto P = rrr::projection(X);
  const auto F = rrr::svd(P.apply(Y));
  const int K = rrr::k_cap(8, 5, P.rank_q, lambda);
  REQUIRE(int(trace.size()) == K + 1);
  for (int k = 0; k <= K; ++k) {
    const double direct =
        rrr::fro_sq(Y - F.truncate(k)) / (8 * 5 - lambda * k);
    CHECK(trace[k] == doctest::Approx(direct).epsilon(1e-10));
  }
  CHECK(trace[0] == doctest::Approx(rrr::fro_sq(Y) / 40.0).epsilon(1e-12));
}

TEST_CASE("all-zero data gives a zero trace and rank zero") {
  CriterionInputs in;
  in.d_sq = Vector::Zero(4);
  in.resid_sq = 0.0;
  in.n = 6;
  in.m = 5;
  in.lambda = 3.0;
  for (double s : rrr::criterion_trace(in)) CHECK(s == 0.0);
  const auto sel = rrr::select_rank(in);
  CHECK(sel.k_hat == 0);
  // All-zero input ties the threshold comparison at every k, so the count
  // form disagrees with the argmin; that is exactly the degenerate flag.
  CHECK(sel.count_form == sel.K);
  CHECK(sel.degenerate);
}

TEST_CASE("noiseless low-rank data is recovered exactly") {
  // Y = XA with rank 3: the zero-residual plateau starts at k = 3 and the
  // smallest-k tie-break must return exactly 3.
  const Matrix X = randn(12, 6, 203);
  const Matrix A = randn(6, 3, 204) * randn(3, 7, 205);
  const Matrix Y = X * A;
  for (double lambda : {0.5, 2.0, 11.0}) {
    const auto in = inputs_from(Y, X, lambda);
    const auto sel = rrr::select_rank(in);
    CAPTURE(lambda);
    CHECK(sel.k_hat == 3);
  }
}

TEST_CASE("closed-form count equals brute-force argmin on random instances") {
  rrr::RandomStream seeds(206);
  int degenerate_count = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + int(seeds.next_u64() % 11);
    const int m = 2 + int(seeds.next_u64() % 11);
    const int p = 1 + int(seeds.next_u64() % 11);
    const Matrix X = randn(n, p, 1000 + trial);
    const Matrix Y = randn(n, m, 2000 + trial);
    // lambda log-uniform on [1, nm]
    const double lambda = std::exp(seeds.uniform01() * std::log(double(n) * m));
    const auto in = inputs_from(Y, X, lambda);
    const auto sel = rrr::select_rank(in);

    const auto trace = rrr::criterion_trace(in);
    int arg = 0;
    for (int k = 1; k < int(trace.size()); ++k) {
      if (trace[k] < trace[arg]) arg = k;
    }
    CAPTURE(trial);
    CHECK(sel.k_hat == arg);
    CHECK(sel.count_form == sel.k_hat);
    degenerate_count += sel.degenerate;
  }
  CHECK(degenerate_count == 0);  // exact ties have measure zero
}

TEST_CASE("the threshold set {k : d_k^2 >= lambda sigma_k^2} is a prefix") {
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix X = randn(9, 4, 3000 + trial);
    const Matrix Y = randn(9, 6, 4000 + trial);
    const auto in = inputs_from(Y, X, 5.0);
    const auto sel = rrr::select_rank(in);
    for (int k = 1; k <= sel.K; ++k) {
      const bool above = in.d_sq(k - 1) >= in.lambda * sel.sigma_sq_trace[k];
      CHECK(above == (k <= sel.k_hat));
    }
  }
}

TEST_CASE("trace is unimodal: decreasing up to k_hat, increasing after") {
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix X = randn(10, 5, 5000 + trial);
    const Matrix Y = randn(10, 7, 6000 + trial);
    const auto in = inputs_from(Y, X, 6.0);
    const auto sel = rrr::select_rank(in);
    const auto& t = sel.sigma_sq_trace;
    for (int k = 1; k < int(t.size()); ++k) {
      if (k <= sel.k_hat) {
        CHECK(t[k] <= t[k - 1] + 1e-12);
      } else {
        CHECK(t[k] >= t[k - 1] - 1e-12);
      }
    }
  }
}

TEST_CASE("monotone-run property: one descent step extends left") {
  // If sigma_k^2 <= sigma_{k-1}^2 then sigma_k^2 <= sigma_l^2 for all l < k.
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix X = randn(8, 4, 7000 + trial);
    const Matrix Y = randn(8, 6, 8000 + trial);
    const auto in = inputs_from(Y, X, 4.0);
    const auto t = rrr::criterion_trace(in);
    for (int k = 1; k < int(t.size()); ++k) {
      if (t[k] <= t[k - 1]) {
        for (int l = 0; l < k; ++l) CHECK(t[k] <= t[l] + 1e-12);
      }
    }
  }
}

TEST_CASE("selection is scale invariant") {
  const Matrix X = randn(10, 4, 207);
  const Matrix Y = randn(10, 6, 208) + X * randn(4, 6, 209);
  const auto base = rrr::select_rank(inputs_from(Y, X, 8.0));
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    const auto scaled = rrr::select_rank(inputs_from(c * Y, X, 8.0));
    CHECK(scaled.k_hat == base.k_hat);
  }
}

TEST_CASE("pure-noise data at the standard lambda selects rank zero") {
  const int n = 60, m = 25, q = 15;
  const Matrix X = randn(n, q, 210);
  const Matrix E = randn(n, m, 211);
  const double lambda = 1.2 * std::pow(std::sqrt(double(m)) + std::sqrt(double(q)), 2.0);
  const auto sel = rrr::select_rank(inputs_from(E, X, lambda));
  CHECK(sel.k_hat == 0);
}

TEST_CASE("sigma_r_hat_sq matches the trace and rejects r beyond the cap") {
  const Matrix X = randn(9, 4, 212);
  const Matrix Y = randn(9, 5, 213);
  const auto in = inputs_from(Y, X, 10.0);
  const auto trace = rrr::criterion_trace(in);
  for (int r = 0; r < int(trace.size()); ++r) {
    CHECK(rrr::sigma_r_hat_sq(in, r) == doctest::Approx(trace[r]));
  }
  CHECK_THROWS_AS(rrr::sigma_r_hat_sq(in, int(trace.size())),
                  rrr::RankOutOfRange);
  CHECK_THROWS_AS(rrr::sigma_r_hat_sq(in, -1), rrr::RankOutOfRange);
}

TEST_CASE("sigma_r sandwich holds when the noise event holds") {
  // sigma^2 <= sigma_r^2 <= nm/(nm - lambda r) sigma^2 on the event
  // 2 d_1^2(PE) <= lambda sigma^2, with sigma^2 = ||Y - (PY)_r||^2/(nm).
  const int n = 40, m = 12, q = 8, r = 2;
  const Matrix X = randn(n, q, 214);
  const Matrix XA = X * (randn(q, r, 215) * 3.0) * randn(r, m, 216);
  const Matrix E = randn(n, m, 217);
  const Matrix Y = XA + E;
  const double lambda = 3.0 * std::pow(std::sqrt(double(m)) + std::sqrt(double(q)), 2.0);
  const auto P = rrr::projection(X);
  const auto in = inputs_from(Y, X, lambda);

  const auto F = rrr::svd(P.apply(Y));
  const double sigma_sq = rrr::fro_sq(Y - F.truncate(r)) / (n * m);
  const double d1_pe_sq =
      std::pow(rrr::singular_values(P.apply(E))(0), 2.0);
  REQUIRE(2.0 * d1_pe_sq <= lambda * sigma_sq);  // event must hold here

  const double s_r = rrr::sigma_r_hat_sq(in, r);
  CHECK(s_r >= sigma_sq - 1e-12);
  CHECK(s_r <= sigma_sq * (n * m) / (n * m - lambda * r) + 1e-12);
}

TEST_CASE("max_admissible_rank enforces the strict inflation constraint") {
  // r < delta/(1+delta) * nm/lambda ∧ m ∧ q, strict.
  CHECK(rrr::max_admissible_rank(50, 50, 30, 315.0, 4.0) == 6);  // < 6.349
  CHECK(rrr::max_admissible_rank(50, 50, 30, 315.0, 1e-6) == 0);
  // Huge delta degenerates to the dimension caps.
  CHECK(rrr::max_admissible_rank(50, 50, 30, 315.0, 1e12) == 7);
  CHECK(rrr::max_admissible_rank(10, 3, 2, 1.0, 1e12) == 2);
  // Boundary is strict: delta/(1+delta)*nm/lambda = 4 exactly -> r = 3.
  CHECK(rrr::max_admissible_rank(10, 10, 10, 10.0, 2.0 / 3.0) == 3);
  CHECK_THROWS_AS(rrr::max_admissible_rank(10, 10, 10, 10.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("diagnostics bundles the cap, rho, and variance estimate") {
  const Matrix X = randn(20, 6, 218);
  const Matrix Y = randn(20, 8, 219);
  const auto in = inputs_from(Y, X, 15.0);
  const auto d = rrr::diagnostics(in, 2, 4.0);
  CHECK(d.K_lambda == rrr::k_cap(20, 8, 6, 15.0));
  CHECK(d.rho ==
        doctest::Approx(160.0 / (160.0 - 15.0 * d.K_lambda)).epsilon(1e-12));
  CHECK(d.rho >= 1.0);
  CHECK(d.max_admissible_rank <= d.K_lambda);
  CHECK(d.sigma_r_hat_sq == doctest::Approx(rrr::sigma_r_hat_sq(in, 2)));
}

TEST_CASE("oracle bounds: noiseless case is exactly tight at zero") {
  const int n = 15, m = 8, q = 5, r = 3;
  const Matrix X = randn(n, q, 220);
  const Matrix XA = X * randn(q, r, 221) * randn(r, m, 222);
  const auto P = rrr::projection(X);
  const auto rep = rrr::oracle_bounds(XA, P, XA, r, r, 50.0);
  CHECK(rep.exact_applicable);
  CHECK(rep.lhs <= 1e-16);
  CHECK(rep.rhs_exact <= 1e-16);
  CHECK(rep.exact_holds);
}

TEST_CASE("oracle bounds hold on Gaussian instances where k_hat = r") {
  const int n = 60, m = 20, q = 10, r = 3;
  const double lambda = 2.2 * std::pow(std::sqrt(double(m)) + std::sqrt(double(q)), 2.0);
  int applicable = 0;
  for (int rep_i = 0; rep_i < 20; ++rep_i) {
    const Matrix X = randn(n, q, 9000 + rep_i);
    const Matrix XA = X * (randn(q, r, 9100 + rep_i) * 2.0) *
                      randn(r, m, 9200 + rep_i);
    const Matrix Y = XA + randn(n, m, 9300 + rep_i);
    const auto P = rrr::projection(X);
    CriterionInputs in;
    in.d_sq = rrr::singular_values(P.coords(Y)).array().square();
    in.resid_sq = rrr::fro_sq(Y - P.apply(Y));
    in.n = n;
    in.m = m;
    in.lambda = lambda;
    const auto sel = rrr::select_rank(in);
    const auto rep = rrr::oracle_bounds(Y, P, XA, sel.k_hat, r, lambda);
    if (rep.exact_applicable) {
      ++applicable;
      CHECK(rep.exact_holds);
      CHECK(rep.lhs <= rep.rhs_exact);
    }
    if (rep.general_event_held) {
      CHECK(rep.general_holds);
      CHECK(rep.lhs <= rep.rhs_general);
      CHECK(rep.C > 2.0);
    }
  }
  CHECK(applicable >= 15);  // recovery is the typical outcome at this SNR
}

TEST_CASE("rank-zero truth with k_hat 0 has zero estimation error") {
  const int n = 12, m = 6, q = 4;
  const Matrix X = randn(n, q, 223);
  const Matrix Y = Matrix::Zero(n, m);
  const auto P = rrr::projection(X);
  const auto rep = rrr::oracle_bounds(Y, P, Matrix::Zero(n, m), 0, 0, 10.0);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.exact_applicable);
  CHECK(rep.exact_holds);
}
