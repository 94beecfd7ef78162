#pragma once

#include <stdexcept>
#include <string>

namespace rrr {

// Thrown when a matrix argument contains NaN or Inf entries.
struct InvalidMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when matrix dimensions do not line up for the requested operation.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a rank argument lies outside its admissible range.
struct RankOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by the residual variance estimator when n = q leaves zero residual
// degrees of freedom.
struct InfeasibleVarianceEstimate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a selector's admissible rank range is empty.
struct NoAdmissibleRank : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a requested quantity is undefined for the given inputs
// (e.g. a coefficient estimate when the Gram matrix is singular).
struct NotAvailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown on file I/O or parse failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rrr
