#include "rrr/moments.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rrr/matrix_io.hpp"

namespace rrr {

double SingularMoments::tail_sum(int lo) const {
  double s = 0.0;
  for (int j = N(); j >= lo && j >= 1; --j) s += S[static_cast<size_t>(j) - 1];
  return s;
}

SingularMoments estimate_moments(int q, int m, long mc_draws,
                                 std::uint64_t seed) {
  if (q <= 0 || m <= 0) {
    throw std::invalid_argument("estimate_moments: q, m must be positive");
  }
  if (mc_draws < 1) {
    throw std::invalid_argument("estimate_moments: mc_draws must be >= 1");
  }
  const int N = std::min(q, m);
  SingularMoments out;
  out.q = q;
  out.m = m;
  out.mc_draws = mc_draws;
  out.seed = seed;
  out.S.assign(static_cast<size_t>(N), 0.0);

  RandomStream root = RandomStream(seed).child(tags::kMoments);
  Matrix Z(q, m);
  for (long t = 0; t < mc_draws; ++t) {
    RandomStream draw = root.child(static_cast<std::uint64_t>(t));
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < m; ++j) Z(i, j) = draw.normal();
    }
    const Vector d = singular_values(Z);
    for (int j = 0; j < N; ++j) out.S[static_cast<size_t>(j)] += d(j) * d(j);
  }
  for (double& s : out.S) s /= static_cast<double>(mc_draws);
  return out;
}

void save_moments_csv(const std::string& path, const SingularMoments& S) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "q,m,j,S_j,mc_draws,seed\n";
  for (int j = 1; j <= S.N(); ++j) {
    out << S.q << "," << S.m << "," << j << "," << format_double(S.at(j))
        << "," << S.mc_draws << "," << S.seed << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

SingularMoments load_moments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty moments file: " + path);
  SingularMoments S;
  int expect_j = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw IoError("bad moments row in " + path);
    const int q = std::stoi(f[0]);
    const int m = std::stoi(f[1]);
    const int j = std::stoi(f[2]);
    if (expect_j == 1) {
      S.q = q;
      S.m = m;
      S.mc_draws = std::stol(f[4]);
      S.seed = std::stoull(f[5]);
    } else if (q != S.q || m != S.m) {
      throw IoError("inconsistent dimensions in " + path);
    }
    if (j != expect_j) throw IoError("non-contiguous j in " + path);
    S.S.push_back(std::stod(f[3]));
    ++expect_j;
  }
  if (S.S.empty()) throw IoError("no moment rows in " + path);
  if (S.N() != std::min(S.q, S.m)) {
    throw IoError("row count does not match q ∧ m in " + path);
  }
  return S;
}

std::string moments_cache_dir() {
  const char* dir = std::getenv("RRR_MOMENTS_CACHE");
  return dir ? std::string(dir) : std::string();
}

SingularMoments load_or_estimate_moments(int q, int m, long mc_draws,
                                         std::uint64_t seed) {
  const std::string dir = moments_cache_dir();
  std::filesystem::path file;
  if (!dir.empty()) {
    file = std::filesystem::path(dir) /
           ("moments_q" + std::to_string(q) + "_m" + std::to_string(m) + "_d" +
            std::to_string(mc_draws) + "_s" + std::to_string(seed) + ".csv");
    if (std::filesystem::exists(file)) {
      const SingularMoments S = load_moments_csv(file.string());
      if (S.q == q && S.m == m && S.mc_draws == mc_draws && S.seed == seed) {
        return S;
      }
    }
  }
  SingularMoments S = estimate_moments(q, m, mc_draws, seed);
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec) save_moments_csv(file.string(), S);
  }
  return S;
}

}  // namespace rrr
