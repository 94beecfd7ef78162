#pragma once

#include <string>

#include "rrr/linalg.hpp"

namespace rrr {

// Matrix files are CSV with a one-line "rows,cols" header followed by one
// line per row. Values are written in the shortest decimal form that parses
// back to the identical double, so files round-trip exactly.

void write_matrix_csv(const std::string& path, const Matrix& M);
Matrix read_matrix_csv(const std::string& path);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double x);

}  // namespace rrr
