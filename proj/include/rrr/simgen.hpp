#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "rrr/linalg.hpp"
#include "rrr/rng.hpp"

namespace rrr {

// Synthetic instances of the model Y = X A + sigma E with a rank-r
// coefficient matrix, AR(1)-correlated design columns, and a configurable
// error law. Every random quantity is a pure function of (seed, purpose,
// indices), so instances are bit-reproducible and replication workers can
// run in any order.

enum class ErrorLaw { kGaussian, kStudentT, kUniform };

struct ErrorSpec {
  ErrorLaw law = ErrorLaw::kGaussian;
  int nu = 6;                // Student-t degrees of freedom (>= 5)
  bool standardize = false;  // rescale t draws to unit variance
};

struct ApproxLowRank {
  double gamma = 0.8;  // leading decay factor past the effective rank
  double beta = 1.0;   // polynomial decay exponent
};

struct SimScenario {
  int n = 0;  // observations
  int m = 0;  // responses
  int p = 0;  // predictors
  int q = 0;  // design rank: p when n >= p, else the factor rank (< p)
  int r = 0;  // true coefficient rank, 0 <= r <= q ∧ m
  double eta = 0.1;  // AR(1) correlation of design columns, in (0,1)
  double b0 = 1.0;   // signal scale
  double sigma = 1.0;
  ErrorSpec error;
  std::optional<ApproxLowRank> approx_low_rank;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument on any violated field constraint.
void validate(const SimScenario& sc);

// JSON round-trip; field names match the struct members.
std::string scenario_to_json(const SimScenario& sc);
SimScenario scenario_from_json(const std::string& text);
void write_scenario(const std::string& path, const SimScenario& sc);
SimScenario read_scenario(const std::string& path);

// Cholesky factor L of the AR(1) covariance Sigma_ij = eta^|i-j|.
Matrix ar1_cholesky(int p, double eta);

// Design draw. n >= p: rows i.i.d. N(0, Sigma). n < p: X = X1 X2 L^T with
// X1 (n x q), X2 (q x p) standard normal, so rank(X) = q almost surely.
Matrix gen_design(const SimScenario& sc, RandomStream& stream);

// Coefficient draw b0 * M1 * M2 with M1 (p x r), M2 (r x m) standard
// normal; exactly rank r (zero matrix for r = 0). With approx_low_rank set,
// the zero tail of the spectrum is replaced by
// d_j = d_r * gamma * (j - r + 1)^(-beta) for j >= r + 1.
Matrix gen_coefficient(const SimScenario& sc, RandomStream& stream);

// Error draw with i.i.d. unit-scale entries of the configured law.
Matrix gen_noise(int n, int m, const ErrorSpec& spec, RandomStream& stream);

// One replication: shared design per seed, shared coefficient per (seed, r),
// fresh noise per (seed, r, rep).
struct Instance {
  SimScenario scenario;
  Matrix X;
  Matrix A;
  Matrix XA;
  Matrix Y;
  ProjectionOp P;
  Vector d_XA;  // singular values of X A
};

Instance make_instance(const SimScenario& sc, int rep);

// Signal-to-noise ratio d_r(XA) / E[d_1(PE)], the expectation estimated by
// Monte Carlo over fresh error draws. Requires r >= 1.
double estimate_snr(const Instance& inst, long mc_draws);

}  // namespace rrr
