#include "rrr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <Eigen/QR>

#include "rrr/errors.hpp"
#include "rrr/matrix_io.hpp"

namespace rrr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// NA cells are empty fields so that spreadsheet tools and the reader below
// agree on what "missing" looks like.
std::string field(double x) { return std::isfinite(x) ? format_double(x) : ""; }

std::string field(const std::optional<int>& x) {
  return x ? std::to_string(*x) : "";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& s, const std::string& path) {
  if (s.empty()) return kNaN;
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ": bad numeric field '" + s + "'");
  }
}

int parse_int_field(const std::string& s, const std::string& path) {
  const double v = parse_field(s, path);
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw IoError(path + ": expected an integer, got '" + s + "'");
  }
  return static_cast<int>(v);
}

constexpr const char* kRecordsHeader =
    "schema_version,scenario_id,replication,method,selected_rank,true_rank,"
    "snr,fit_err,pred_err,lambda0,lambda_final,steps,diagnostics";

}  // namespace

void write_records_csv(const std::string& path,
                       const std::vector<ReplicationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << kRecordsHeader << "\n";
  for (const ReplicationRecord& r : records) {
    if (r.diagnostics.find(',') != std::string::npos ||
        r.diagnostics.find('\n') != std::string::npos) {
      throw IoError("diagnostics must not contain commas or newlines: '" +
                    r.diagnostics + "'");
    }
    out << 1 << ',' << r.scenario_id << ',' << r.replication << ','
        << r.method << ',' << field(r.selected_rank) << ',' << r.true_rank
        << ',' << field(r.snr) << ',' << field(r.fit_err) << ','
        << field(r.pred_err) << ',' << field(r.lambda0) << ','
        << field(r.lambda_final) << ',' << r.steps << ',' << r.diagnostics
        << "\n";
  }
  if (!out) throw IoError("failed while writing " + path);
}

std::vector<ReplicationRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  if (split_line(line) != split_line(kRecordsHeader)) {
    throw IoError(path + ": unexpected header '" + line + "'");
  }
  std::vector<ReplicationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 13) {
      throw IoError(path + ": expected 13 fields, got " +
                    std::to_string(f.size()));
    }
    if (parse_int_field(f[0], path) != 1) {
      throw IoError(path + ": unsupported schema_version '" + f[0] + "'");
    }
    ReplicationRecord r;
    r.scenario_id = f[1];
    r.replication = parse_int_field(f[2], path);
    r.method = f[3];
    if (!f[4].empty()) r.selected_rank = parse_int_field(f[4], path);
    r.true_rank = parse_int_field(f[5], path);
    r.snr = parse_field(f[6], path);
    r.fit_err = parse_field(f[7], path);
    r.pred_err = parse_field(f[8], path);
    r.lambda0 = parse_field(f[9], path);
    r.lambda_final = parse_field(f[10], path);
    r.steps = parse_int_field(f[11], path);
    r.diagnostics = f[12];
    r.wall_ms = kNaN;
    out.push_back(std::move(r));
  }
  return out;
}

void write_timings_csv(const std::string& path,
                       const std::vector<ReplicationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "schema_version,scenario_id,replication,method,wall_ms\n";
  for (const ReplicationRecord& r : records) {
    out << 1 << ',' << r.scenario_id << ',' << r.replication << ','
        << r.method << ',' << field(r.wall_ms) << "\n";
  }
  if (!out) throw IoError("failed while writing " + path);
}

std::vector<ReportRow> aggregate(const std::vector<ReplicationRecord>& recs) {
  struct Acc {
    long reps = 0;
    long recovered = 0;
    long sum_selected = 0;
    long n_snr = 0, n_fit = 0, n_pred = 0;
    double sum_snr = 0.0, sum_fit = 0.0, sum_pred = 0.0;
  };
  std::map<std::tuple<std::string, std::string, int>, Acc> groups;
  for (const ReplicationRecord& r : recs) {
    Acc& a = groups[{r.scenario_id, r.method, r.true_rank}];
    if (r.selected_rank) {
      a.reps += 1;
      a.sum_selected += *r.selected_rank;
      if (*r.selected_rank == r.true_rank) a.recovered += 1;
    }
    if (std::isfinite(r.snr)) {
      a.n_snr += 1;
      a.sum_snr += r.snr;
    }
    if (std::isfinite(r.fit_err)) {
      a.n_fit += 1;
      a.sum_fit += r.fit_err;
    }
    if (std::isfinite(r.pred_err)) {
      a.n_pred += 1;
      a.sum_pred += r.pred_err;
    }
  }
  std::vector<ReportRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, a] : groups) {
    ReportRow row;
    row.scenario_id = std::get<0>(key);
    row.method = std::get<1>(key);
    row.true_rank = std::get<2>(key);
    row.reps = a.reps;
    row.recovered = a.recovered;
    row.recovery_rate =
        a.reps > 0 ? static_cast<double>(a.recovered) / a.reps : kNaN;
    row.mean_selected =
        a.reps > 0 ? static_cast<double>(a.sum_selected) / a.reps : kNaN;
    row.mean_snr = a.n_snr > 0 ? a.sum_snr / a.n_snr : kNaN;
    row.mean_fit_err = a.n_fit > 0 ? a.sum_fit / a.n_fit : kNaN;
    row.mean_pred_err = a.n_pred > 0 ? a.sum_pred / a.n_pred : kNaN;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "schema_version,scenario_id,method,true_rank,reps,recovered,"
         "recovery_rate,mean_selected,mean_snr,mean_fit_err,mean_pred_err\n";
  for (const ReportRow& r : rows) {
    out << 1 << ',' << r.scenario_id << ',' << r.method << ',' << r.true_rank
        << ',' << r.reps << ',' << r.recovered << ','
        << field(r.recovery_rate) << ',' << field(r.mean_selected) << ','
        << field(r.mean_snr) << ',' << field(r.mean_fit_err) << ','
        << field(r.mean_pred_err) << "\n";
  }
  if (!out) throw IoError("failed while writing " + path);
}

Matrix fitted_mean(const Matrix& Y, const ProjectionOp& P, int k) {
  const Matrix coords = P.coords(Y);
  if (coords.rows() == 0) {
    if (k != 0) throw RankOutOfRange("fitted mean: rank-0 design admits k=0");
    return Matrix::Zero(Y.rows(), Y.cols());
  }
  const SvdFactors f = svd(coords);
  return P.basis * f.truncate(k);
}

Matrix coefficient_estimate(const Matrix& X, const Matrix& fitted) {
  if (X.rows() != fitted.rows()) {
    throw ShapeError("coefficient estimate: X and fitted mean disagree on n");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < X.cols()) {
    throw NotAvailable(
        "coefficient estimate: design lacks full column rank, the "
        "coefficient is not identified");
  }
  return qr.solve(fitted);
}

double fit_error(const Matrix& fitted, const Matrix& XA) {
  if (fitted.rows() != XA.rows() || fitted.cols() != XA.cols()) {
    throw ShapeError("fit error: shape mismatch");
  }
  const double nm = static_cast<double>(XA.rows()) * XA.cols();
  return std::sqrt((fitted - XA).squaredNorm() / nm);
}

double prediction_error(const Matrix& A_hat, const Matrix& A) {
  if (A_hat.rows() != A.rows() || A_hat.cols() != A.cols()) {
    throw ShapeError("prediction error: shape mismatch");
  }
  const double pm = static_cast<double>(A.rows()) * A.cols();
  return std::sqrt((A_hat - A).squaredNorm() / pm);
}

MethodSpec parse_method(const std::string& id) {
  MethodSpec spec;
  spec.id = id;
  auto with_constant = [&](const std::string& prefix,
                           MethodSpec::Kind kind) -> bool {
    if (id.rfind(prefix, 0) != 0) return false;
    const std::string tail = id.substr(prefix.size());
    try {
      size_t pos = 0;
      spec.C = std::stod(tail, &pos);
      if (pos != tail.size() || !(spec.C > 0.0)) throw std::invalid_argument(tail);
    } catch (const std::exception&) {
      throw std::invalid_argument("method '" + id +
                                  "': expected a positive constant after '" +
                                  prefix + "'");
    }
    spec.kind = kind;
    return true;
  };
  if (id == "GRS") {
    spec.kind = MethodSpec::Kind::kGrs;
  } else if (id == "STRS") {
    spec.kind = MethodSpec::Kind::kStrs;
  } else if (id == "SSTRS") {
    spec.kind = MethodSpec::Kind::kSstrs;
  } else if (id == "STRS-DB") {
    spec.kind = MethodSpec::Kind::kDb;
  } else if (with_constant("BSW-", MethodSpec::Kind::kBsw) ||
             with_constant("KF-", MethodSpec::Kind::kKf)) {
    // constant parsed above
  } else {
    throw std::invalid_argument(
        "unknown method '" + id +
        "' (expected GRS, STRS, SSTRS, STRS-DB, BSW-<C> or KF-<C>)");
  }
  return spec;
}

}  // namespace rrr
