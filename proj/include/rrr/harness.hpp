#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rrr/baselines.hpp"
#include "rrr/criterion.hpp"
#include "rrr/selftune.hpp"
#include "rrr/simgen.hpp"

namespace rrr {

// Replication driver: runs the named studies over scenario grids, collects
// one record per (scenario, replication, method), writes versioned CSV
// tables and SVG charts, and aggregates recovery statistics.

struct ReplicationRecord {
  std::string scenario_id;
  int replication = 0;
  std::string method;  // GRS, STRS, SSTRS, STRS-DB, BSW-C, KF-C
  // Selected rank; empty when the method is infeasible on this scenario
  // (e.g. the fixed-threshold rule at n = q).
  std::optional<int> selected_rank;
  int true_rank = 0;
  double snr = 0.0;           // NaN -> NA
  double fit_err = 0.0;       // ||fitted - XA|| / sqrt(nm); NaN -> NA
  double pred_err = 0.0;      // ||A_hat - A|| / sqrt(pm); NaN -> NA
  double lambda0 = 0.0;       // NaN -> NA (threshold-count methods)
  double lambda_final = 0.0;  // NaN -> NA
  int steps = 0;              // lambda steps taken; 0 for non-iterative
  std::string diagnostics;    // semicolon-separated key=value pairs
  double wall_ms = 0.0;       // not part of the deterministic tables
};

// records.csv holds every column except wall_ms so that a rerun with the
// same seed is byte-identical; timings go to a separate timings.csv.
void write_records_csv(const std::string& path,
                       const std::vector<ReplicationRecord>& records);
std::vector<ReplicationRecord> read_records_csv(const std::string& path);
void write_timings_csv(const std::string& path,
                       const std::vector<ReplicationRecord>& records);

struct ReportRow {
  std::string scenario_id;
  std::string method;
  int true_rank = 0;
  long reps = 0;       // records with a selected rank
  long recovered = 0;  // selected == true rank
  double recovery_rate = 0.0;  // recovered / reps (NaN when reps = 0)
  double mean_selected = 0.0;
  double mean_snr = 0.0;
  double mean_fit_err = 0.0;
  double mean_pred_err = 0.0;
};

// Groups by (scenario, method, true rank); rates come from integer counts.
std::vector<ReportRow> aggregate(const std::vector<ReplicationRecord>& recs);
void write_report_csv(const std::string& path,
                      const std::vector<ReportRow>& rows);

// Fitted mean (PY)_k lifted to n x m; k runs over the spectrum of the
// projected data.
Matrix fitted_mean(const Matrix& Y, const ProjectionOp& P, int k);

// Least-squares coefficient reproducing a fitted mean: solves X A = fitted.
// Throws NotAvailable when X lacks full column rank.
Matrix coefficient_estimate(const Matrix& X, const Matrix& fitted);

double fit_error(const Matrix& fitted, const Matrix& XA);         // /sqrt(nm)
double prediction_error(const Matrix& A_hat, const Matrix& A);    // /sqrt(pm)

struct MethodSpec {
  enum class Kind { kGrs, kStrs, kSstrs, kDb, kBsw, kKf };
  Kind kind = Kind::kStrs;
  double C = 0.0;  // leading constant for BSW/KF
  std::string id;  // display name, e.g. "BSW-1.1"
};

// Parses "GRS", "STRS", "SSTRS", "STRS-DB", "BSW-<C>", "KF-<C>".
MethodSpec parse_method(const std::string& id);

struct RunOptions {
  std::uint64_t seed = 1u;
  int reps = 0;  // 0 -> per-experiment default
  double eps = 0.05;
  long mc_draws = 500;
  std::string out_dir = ".";
  std::vector<std::string> methods;  // empty -> per-experiment default
  int threads = 0;                   // 0 -> hardware concurrency
  bool quiet = false;
};

struct ExperimentResult {
  std::string name;
  std::vector<ReplicationRecord> records;
  std::vector<ReportRow> report;
  std::vector<std::string> files;  // artifacts written under out_dir
};

// Named studies: exp1..exp5, tightness, ratio, fit-study, mc-vs-db,
// kf-compare. Throws std::invalid_argument for unknown names.
ExperimentResult run_experiment(const std::string& name,
                                const RunOptions& opts);
std::vector<std::string> experiment_names();

// Spectrum comparison: projected noise d_j(PE) against a pure Gaussian
// matrix of matching shape, averaged over independent pairs. Reported both
// as a ratio of per-index means and as a mean of per-pair ratios.
struct RatioRow {
  std::string case_id;
  double eta = 0.0;
  int nu = 0;  // 0 = gaussian noise
  int j = 0;   // singular value index, 1-based
  double mean_d_pe = 0.0;
  double mean_d_z = 0.0;
  double ratio_of_means = 0.0;
  double mean_of_ratios = 0.0;
};
std::vector<RatioRow> ratio_study(const std::string& case_id, int n, int m,
                                  int p, int q, double eta,
                                  const ErrorSpec& error, int pairs,
                                  std::uint64_t seed);

// Threshold slack at exact recovery: for one (X, A, E) draw, the largest
// grid lambda whose criterion minimum sits exactly at the true rank, with
// the per-row guarantee sqrt(lambda sigma_r^2) - d_1(PE) <= d_r(XA).
struct TightnessRow {
  std::string pair_id;
  int n = 0, m = 0, p = 0, q = 0, r = 0;
  double eta = 0.0, b0 = 0.0;
  bool recovered = false;   // some grid lambda selects exactly r
  double lambda = 0.0;      // largest recovering lambda; NaN when none
  double d_r_xa = 0.0;      // r-th singular value of the signal
  double threshold = 0.0;   // sqrt(lambda sigma_r^2); NaN when none
  double slack = 0.0;       // threshold - d_1(PE); NaN when none
};
std::vector<TightnessRow> tightness_sweep(const std::vector<SimScenario>& pairs,
                                          const std::vector<double>& grid);

}  // namespace rrr
