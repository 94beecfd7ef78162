#include "rrr/simgen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rrr/errors.hpp"
#include "rrr/matrix_io.hpp"

namespace rrr {

void validate(const SimScenario& sc) {
  auto fail = [](const std::string& msg) {
    throw std::invalid_argument("scenario: " + msg);
  };
  if (sc.n <= 0 || sc.m <= 0 || sc.p <= 0 || sc.q <= 0) {
    fail("n, m, p, q must be positive");
  }
  if (sc.n >= sc.p) {
    if (sc.q != sc.p) fail("q must equal p when n >= p");
  } else {
    if (sc.q >= sc.p) fail("q must be below p when n < p");
    if (sc.q > sc.n) fail("q cannot exceed n");
  }
  if (sc.r < 0 || sc.r > std::min(sc.q, sc.m)) fail("need 0 <= r <= q ∧ m");
  if (!(sc.eta > 0.0 && sc.eta < 1.0)) fail("eta must lie in (0,1)");
  if (!(sc.b0 > 0.0)) fail("b0 must be positive");
  if (!(sc.sigma > 0.0)) fail("sigma must be positive");
  if (sc.error.law == ErrorLaw::kStudentT && sc.error.nu < 5) {
    fail("student_t requires nu >= 5");
  }
  if (sc.approx_low_rank) {
    if (sc.r < 1) fail("approx_low_rank requires r >= 1");
    if (!(sc.approx_low_rank->gamma > 0.0)) fail("gamma must be positive");
    if (!(sc.approx_low_rank->beta > 0.0)) fail("beta must be positive");
  }
}

namespace {

std::string law_name(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::kGaussian:
      return "gaussian";
    case ErrorLaw::kStudentT:
      return "student_t";
    case ErrorLaw::kUniform:
      return "uniform";
  }
  return "?";
}

ErrorLaw law_from_name(const std::string& name) {
  if (name == "gaussian") return ErrorLaw::kGaussian;
  if (name == "student_t") return ErrorLaw::kStudentT;
  if (name == "uniform") return ErrorLaw::kUniform;
  throw IoError("unknown error_law '" + name + "'");
}

}  // namespace

std::string scenario_to_json(const SimScenario& sc) {
  nlohmann::json j;
  j["n"] = sc.n;
  j["m"] = sc.m;
  j["p"] = sc.p;
  j["q"] = sc.q;
  j["r"] = sc.r;
  j["eta"] = sc.eta;
  j["b0"] = sc.b0;
  j["sigma"] = sc.sigma;
  j["error_law"] = law_name(sc.error.law);
  if (sc.error.law == ErrorLaw::kStudentT) {
    j["nu"] = sc.error.nu;
    j["standardize"] = sc.error.standardize;
  }
  if (sc.approx_low_rank) {
    j["approx_low_rank"] = {{"gamma", sc.approx_low_rank->gamma},
                            {"beta", sc.approx_low_rank->beta}};
  }
  j["seed"] = sc.seed;
  return j.dump(2) + "\n";
}

SimScenario scenario_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("scenario parse error: ") + e.what());
  }
  SimScenario sc;
  try {
    sc.n = j.at("n").get<int>();
    sc.m = j.at("m").get<int>();
    sc.p = j.at("p").get<int>();
    sc.q = j.at("q").get<int>();
    sc.r = j.at("r").get<int>();
    sc.eta = j.at("eta").get<double>();
    sc.b0 = j.at("b0").get<double>();
    sc.sigma = j.value("sigma", 1.0);
    sc.error.law = law_from_name(j.value("error_law", "gaussian"));
    sc.error.nu = j.value("nu", 6);
    sc.error.standardize = j.value("standardize", false);
    if (j.contains("approx_low_rank")) {
      ApproxLowRank a;
      a.gamma = j.at("approx_low_rank").at("gamma").get<double>();
      a.beta = j.at("approx_low_rank").at("beta").get<double>();
      sc.approx_low_rank = a;
    }
    sc.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("scenario field error: ") + e.what());
  }
  validate(sc);
  return sc;
}

void write_scenario(const std::string& path, const SimScenario& sc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << scenario_to_json(sc);
  if (!out) throw IoError("write failed: " + path);
}

SimScenario read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

Matrix ar1_cholesky(int p, double eta) {
  if (p <= 0) throw std::invalid_argument("ar1_cholesky: p must be positive");
  if (!(eta > 0.0 && eta < 1.0)) {
    throw std::invalid_argument("ar1_cholesky: eta must lie in (0,1)");
  }
  Matrix Sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      Sigma(i, j) = std::pow(eta, std::abs(i - j));
    }
  }
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("ar1_cholesky: factorization failed");
  }
  return llt.matrixL();
}

namespace {

Matrix standard_normal(int rows, int cols, RandomStream& stream) {
  Matrix Z(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) Z(i, j) = stream.normal();
  }
  return Z;
}

}  // namespace

Matrix gen_design(const SimScenario& sc, RandomStream& stream) {
  validate(sc);
  const Matrix L = ar1_cholesky(sc.p, sc.eta);
  if (sc.n >= sc.p) {
    // Rows i.i.d. N(0, Sigma): X = Z L^T.
    return standard_normal(sc.n, sc.p, stream) * L.transpose();
  }
  // Rank-q factor design for the high-dimensional regime.
  const Matrix X1 = standard_normal(sc.n, sc.q, stream);
  const Matrix X2 = standard_normal(sc.q, sc.p, stream);
  return X1 * (X2 * L.transpose());
}

Matrix gen_coefficient(const SimScenario& sc, RandomStream& stream) {
  validate(sc);
  if (sc.r == 0) return Matrix::Zero(sc.p, sc.m);
  const Matrix M1 = standard_normal(sc.p, sc.r, stream);
  const Matrix M2 = standard_normal(sc.r, sc.m, stream);
  Matrix A = sc.b0 * (M1 * M2);
  if (!sc.approx_low_rank) return A;

  // Replace the zero tail of the spectrum by a slow polynomial decay, so A
  // has full numerical rank but effective rank r.
  const SvdFactors F = svd(A);
  Vector d = F.d;
  const double d_r = d(sc.r - 1);
  const double gamma = sc.approx_low_rank->gamma;
  const double beta = sc.approx_low_rank->beta;
  for (int j = sc.r + 1; j <= static_cast<int>(d.size()); ++j) {
    d(j - 1) = d_r * gamma * std::pow(static_cast<double>(j - sc.r + 1), -beta);
  }
  return F.U * d.asDiagonal() * F.V.transpose();
}

Matrix gen_noise(int n, int m, const ErrorSpec& spec, RandomStream& stream) {
  if (n <= 0 || m <= 0) {
    throw std::invalid_argument("gen_noise: n, m must be positive");
  }
  if (spec.law == ErrorLaw::kStudentT && spec.nu < 5) {
    throw std::invalid_argument("gen_noise: student_t requires nu >= 5");
  }
  Matrix E(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      switch (spec.law) {
        case ErrorLaw::kGaussian:
          E(i, j) = stream.normal();
          break;
        case ErrorLaw::kStudentT:
          E(i, j) = stream.student_t(spec.nu, spec.standardize);
          break;
        case ErrorLaw::kUniform:
          E(i, j) = stream.uniform_sym_unit_var();
          break;
      }
    }
  }
  return E;
}

Instance make_instance(const SimScenario& sc, int rep) {
  validate(sc);
  if (rep < 0) throw std::invalid_argument("make_instance: rep must be >= 0");
  const RandomStream root(sc.seed);

  Instance inst;
  inst.scenario = sc;
  {
    RandomStream s = root.child(tags::kDesign);
    inst.X = gen_design(sc, s);
  }
  {
    RandomStream s = root.child(tags::kCoefficient)
                         .child(static_cast<std::uint64_t>(sc.r));
    inst.A = gen_coefficient(sc, s);
  }
  {
    RandomStream s = root.child(tags::kNoise)
                         .child(static_cast<std::uint64_t>(sc.r))
                         .child(static_cast<std::uint64_t>(rep));
    inst.Y = sc.sigma * gen_noise(sc.n, sc.m, sc.error, s);
  }
  inst.XA = inst.X * inst.A;
  inst.Y += inst.XA;
  inst.P = projection(inst.X);
  inst.d_XA = singular_values(inst.XA);
  return inst;
}

double estimate_snr(const Instance& inst, long mc_draws) {
  const SimScenario& sc = inst.scenario;
  if (sc.r < 1) {
    throw std::invalid_argument("estimate_snr: requires r >= 1");
  }
  if (mc_draws < 1) {
    throw std::invalid_argument("estimate_snr: mc_draws must be >= 1");
  }
  RandomStream root = RandomStream(sc.seed).child(tags::kSnr);
  double mean_d1 = 0.0;
  for (long t = 0; t < mc_draws; ++t) {
    RandomStream s = root.child(static_cast<std::uint64_t>(t));
    const Matrix E = gen_noise(sc.n, sc.m, sc.error, s);
    const Vector d = singular_values(inst.P.coords(E));
    mean_d1 += d(0);
  }
  mean_d1 = sc.sigma * mean_d1 / static_cast<double>(mc_draws);
  return inst.d_XA(sc.r - 1) / mean_d1;
}

}  // namespace rrr
