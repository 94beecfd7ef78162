#include "rrr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rrr/matrix_io.hpp"
#include "rrr/rng.hpp"

namespace rrr {

double sigma_tilde_sq(double resid_sq, int n, int q, int m) {
  if (n == q) {
    throw InfeasibleVarianceEstimate(
        "sigma_tilde_sq: n = q leaves no residual degrees of freedom");
  }
  if (n < q || m <= 0) {
    throw std::invalid_argument("sigma_tilde_sq: need n > q and m > 0");
  }
  if (resid_sq < 0.0) {
    throw std::invalid_argument("sigma_tilde_sq: resid_sq must be >= 0");
  }
  return resid_sq / (static_cast<double>(n - q) * m);
}

double sigma_tilde_sq(const Matrix& Y, const ProjectionOp& P) {
  const double resid_sq = (Y - P.apply(Y)).squaredNorm();
  return sigma_tilde_sq(resid_sq, static_cast<int>(Y.rows()), P.rank_q,
                        static_cast<int>(Y.cols()));
}

double bsw_mu(const BswConfig& cfg, int m, int q, double sigma_tilde_sq,
              const SingularMoments* moments) {
  if (cfg.mu_mode == BswConfig::MuMode::kDeterministic) {
    return cfg.C * static_cast<double>(m + q) * sigma_tilde_sq;
  }
  if (moments == nullptr) {
    throw std::invalid_argument("bsw_mu: MC mode needs a moments table");
  }
  if (moments->m != m || moments->q != q) {
    throw ShapeError("bsw_mu: moments table shaped for (q,m) = (" +
                     std::to_string(moments->q) + "," +
                     std::to_string(moments->m) + ")");
  }
  return cfg.C * moments->at(1) * sigma_tilde_sq;
}

int bsw_select(const Vector& d_sq, double mu) {
  if (!(mu > 0.0)) {
    throw std::invalid_argument("bsw_select: mu must be positive");
  }
  int count = 0;
  while (count < d_sq.size() && d_sq(count) >= mu) ++count;
  return count;
}

namespace {

std::filesystem::path g_norm_cache_file(int q, int m, long mc_draws,
                                        std::uint64_t seed) {
  return std::filesystem::path(moments_cache_dir()) /
         ("gnorm_q" + std::to_string(q) + "_m" + std::to_string(m) + "_d" +
          std::to_string(mc_draws) + "_s" + std::to_string(seed) + ".csv");
}

}  // namespace

KfConfig estimate_g_norms(int q, int m, long mc_draws, std::uint64_t seed,
                          double C) {
  if (q <= 0 || m <= 0 || mc_draws < 1) {
    throw std::invalid_argument("estimate_g_norms: bad arguments");
  }
  KfConfig cfg;
  cfg.C = C;
  cfg.q = q;
  cfg.m = m;
  cfg.mc_draws = mc_draws;
  cfg.seed = seed;
  const int N = std::min(q, m);

  // Same tabular cache format as the singular-moment files; the value
  // column stores the pre-square mean E ||G||_{(2,j)}.
  const std::string dir = moments_cache_dir();
  if (!dir.empty()) {
    const auto file = g_norm_cache_file(q, m, mc_draws, seed);
    if (std::filesystem::exists(file)) {
      const SingularMoments t = load_moments_csv(file.string());
      if (t.q == q && t.m == m && t.mc_draws == mc_draws && t.seed == seed) {
        cfg.g_norm_sq.resize(static_cast<size_t>(N));
        for (int j = 1; j <= N; ++j) {
          cfg.g_norm_sq[static_cast<size_t>(j) - 1] = t.at(j) * t.at(j);
        }
        return cfg;
      }
    }
  }

  std::vector<double> mean_norm(static_cast<size_t>(N), 0.0);
  RandomStream root = RandomStream(seed).child(tags::kGnorm);
  Matrix G(q, m);
  for (long t = 0; t < mc_draws; ++t) {
    RandomStream draw = root.child(static_cast<std::uint64_t>(t));
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < m; ++j) G(i, j) = draw.normal();
    }
    const Vector d = singular_values(G);
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
      acc += d(k) * d(k);
      mean_norm[static_cast<size_t>(k)] += std::sqrt(acc);
    }
  }
  cfg.g_norm_sq.resize(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) {
    const double mean = mean_norm[static_cast<size_t>(k)] / mc_draws;
    cfg.g_norm_sq[static_cast<size_t>(k)] = mean * mean;
  }

  if (!dir.empty()) {
    SingularMoments t;
    t.q = q;
    t.m = m;
    t.mc_draws = mc_draws;
    t.seed = seed;
    t.S.resize(static_cast<size_t>(N));
    for (int k = 0; k < N; ++k) {
      t.S[static_cast<size_t>(k)] = mean_norm[static_cast<size_t>(k)] / mc_draws;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!ec) {
      save_moments_csv(g_norm_cache_file(q, m, mc_draws, seed).string(), t);
    }
  }
  return cfg;
}

int kf_select(const Vector& d_sq, double resid_sq, int n, int m,
              const KfConfig& cfg) {
  const int N = static_cast<int>(d_sq.size());
  if (static_cast<int>(cfg.g_norm_sq.size()) < N) {
    throw ShapeError("kf_select: g-norm table shorter than the spectrum");
  }
  const double nm = static_cast<double>(n) * m;

  std::vector<double> res(static_cast<size_t>(N) + 1);
  res[static_cast<size_t>(N)] = resid_sq;
  for (int k = N - 1; k >= 0; --k) res[static_cast<size_t>(k)] = res[k + 1] + d_sq(k);

  int best = -1;
  double best_val = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double denom = nm - 1.0 - cfg.C * cfg.g_sq_at(k);
    if (denom < 1.0) break;  // penalties grow with k; later k are worse
    const double val = res[static_cast<size_t>(k)] / denom;
    if (best < 0 || val < best_val) {
      best = k;
      best_val = val;
    }
  }
  if (best < 0) throw NoAdmissibleRank("kf_select: no admissible rank");
  return best;
}

}  // namespace rrr
