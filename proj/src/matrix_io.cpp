#include "rrr/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace rrr {

std::string format_double(double x) {
  char buf[40];
  if (x == std::floor(x) && std::fabs(x) < 1e15) {
    const int len = std::snprintf(buf, sizeof(buf), "%.0f", x);
    return std::string(buf, static_cast<size_t>(len));
  }
  for (int prec = 1; prec <= 17; ++prec) {
    const int len = std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    double back = 0.0;
    const auto [ptr, ec] = std::from_chars(buf, buf + len, back);
    if (ec == std::errc() && ptr == buf + len &&
        std::memcmp(&back, &x, sizeof(double)) == 0) {
      return std::string(buf, static_cast<size_t>(len));
    }
  }
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf, static_cast<size_t>(len));
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << M.rows() << "," << M.cols() << "\n";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out << ",";
      out << format_double(M(i, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& path) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw IoError("bad numeric field '" + s + "' in " + path);
  }
  return v;
}

}  // namespace

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty matrix file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  if (header.size() != 2) {
    throw IoError("expected 'rows,cols' header in " + path);
  }
  long rows = 0, cols = 0;
  try {
    rows = std::stol(header[0]);
    cols = std::stol(header[1]);
  } catch (const std::exception&) {
    throw IoError("bad dimension header in " + path);
  }
  if (rows <= 0 || cols <= 0) {
    throw IoError("non-positive dimensions in " + path);
  }
  Matrix M(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw IoError("truncated matrix file (row " + std::to_string(i) +
                    "): " + path);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_csv(line);
    if (static_cast<long>(fields.size()) != cols) {
      throw IoError("row " + std::to_string(i) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(cols) + ": " + path);
    }
    for (long j = 0; j < cols; ++j) M(i, j) = parse_double(fields[j], path);
  }
  return M;
}

}  // namespace rrr
