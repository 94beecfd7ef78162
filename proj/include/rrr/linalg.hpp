#pragma once

#include <Eigen/Dense>

#include "rrr/errors.hpp"

namespace rrr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Squared Frobenius norm.
inline double fro_sq(const Matrix& M) { return M.squaredNorm(); }

// Thin SVD M = U diag(d) V^T with d nonincreasing. Vector pairs carry a
// fixed sign convention (first nonzero entry of each left vector is
// nonnegative) so repeated factorizations of equal inputs agree exactly.
struct SvdFactors {
  Vector d;  // singular values, nonincreasing, >= 0
  Matrix U;  // left singular vectors, orthonormal columns
  Matrix V;  // right singular vectors, orthonormal columns

  // Best rank-<=k approximation sum_{j<=k} d_j u_j v_j^T; k = 0 gives the
  // zero matrix. Throws RankOutOfRange for k outside [0, d.size()].
  Matrix truncate(int k) const;

  // Number of singular values strictly above the threshold.
  int count_above(double threshold) const;
};

SvdFactors svd(const Matrix& M);

// Singular values only (skips the vector computation).
Vector singular_values(const Matrix& M);

// Orthogonal projection onto the column space of a design matrix, stored as
// an orthonormal basis (n x q) rather than the dense n x n projector.
struct ProjectionOp {
  Matrix basis;  // orthonormal columns spanning col(X)
  int rank_q = 0;

  // P Y = basis (basis^T Y). Throws ShapeError on a row-count mismatch.
  Matrix apply(const Matrix& Y) const;

  // basis^T Y: coordinates of the projection, a q x m matrix carrying the
  // same singular values as P Y.
  Matrix coords(const Matrix& Y) const;
};

// Basis of col(X) with numerical rank #{ d_j(X) > rank_tol * d_1(X) }.
// An all-zero X yields the rank-0 projector (empty basis, P Y = 0).
ProjectionOp projection(const Matrix& X, double rank_tol = 1e-10);

}  // namespace rrr
