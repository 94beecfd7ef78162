#include "rrr/linalg.hpp"

#include <Eigen/SVD>

namespace rrr {

namespace {

void require_finite(const Matrix& M, const char* what) {
  if (!M.allFinite()) {
    throw InvalidMatrix(std::string(what) + ": non-finite entries");
  }
}

// Flip each (u_j, v_j) pair so the first nonzero entry of u_j is positive.
void fix_signs(Matrix& U, Matrix& V) {
  for (int j = 0; j < U.cols(); ++j) {
    double lead = 0.0;
    for (int i = 0; i < U.rows(); ++i) {
      if (U(i, j) != 0.0) {
        lead = U(i, j);
        break;
      }
    }
    if (lead < 0.0) {
      U.col(j) = -U.col(j);
      V.col(j) = -V.col(j);
    }
  }
}

}  // namespace

Matrix SvdFactors::truncate(int k) const {
  const int nsv = static_cast<int>(d.size());
  if (k < 0 || k > nsv) {
    throw RankOutOfRange("truncate: k = " + std::to_string(k) +
                         " outside [0, " + std::to_string(nsv) + "]");
  }
  if (k == 0) return Matrix::Zero(U.rows(), V.rows());
  return U.leftCols(k) * d.head(k).asDiagonal() * V.leftCols(k).transpose();
}

int SvdFactors::count_above(double threshold) const {
  int c = 0;
  while (c < d.size() && d(c) > threshold) ++c;
  return c;
}

SvdFactors svd(const Matrix& M) {
  require_finite(M, "svd");
  Eigen::BDCSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors f{dec.singularValues(), dec.matrixU(), dec.matrixV()};
  fix_signs(f.U, f.V);
  return f;
}

Vector singular_values(const Matrix& M) {
  require_finite(M, "singular_values");
  Eigen::BDCSVD<Matrix> dec(M);
  return dec.singularValues();
}

Matrix ProjectionOp::apply(const Matrix& Y) const {
  if (Y.rows() != basis.rows()) {
    throw ShapeError("project: Y has " + std::to_string(Y.rows()) +
                     " rows, basis has " + std::to_string(basis.rows()));
  }
  if (rank_q == 0) return Matrix::Zero(Y.rows(), Y.cols());
  return basis * (basis.transpose() * Y);
}

Matrix ProjectionOp::coords(const Matrix& Y) const {
  if (Y.rows() != basis.rows()) {
    throw ShapeError("coords: Y has " + std::to_string(Y.rows()) +
                     " rows, basis has " + std::to_string(basis.rows()));
  }
  return basis.transpose() * Y;
}

ProjectionOp projection(const Matrix& X, double rank_tol) {
  require_finite(X, "projection");
  if (rank_tol <= 0.0) {
    throw std::invalid_argument("projection: rank_tol must be positive");
  }
  Eigen::BDCSVD<Matrix> dec(X, Eigen::ComputeThinU);
  const Vector& d = dec.singularValues();
  const double d1 = d.size() > 0 ? d(0) : 0.0;
  int q = 0;
  if (d1 > 0.0) {
    while (q < d.size() && d(q) > rank_tol * d1) ++q;
  }
  ProjectionOp P;
  P.rank_q = q;
  P.basis = dec.matrixU().leftCols(q);
  return P;
}

}  // namespace rrr
