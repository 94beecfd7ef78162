// Command-line front end: rank selection on CSV matrices, instance
// simulation, Monte-Carlo table management, the named experiment suites,
// and record aggregation.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rrr/harness.hpp"
#include "rrr/matrix_io.hpp"
#include "rrr/moments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::uint64_t seed = 1;
  int reps = 0;
  double eps = 0.05;
  long mc_draws = 500;
  std::string out_dir = ".";
  std::vector<std::string> methods;
  int threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--seed", o->seed, "master seed (default 1)");
  cmd->add_option("--reps", o->reps,
                  "replications per cell (0 = per-study default)");
  cmd->add_option("--eps", o->eps, "self-tune margin in (0,1), default 0.05");
  cmd->add_option("--mc-draws", o->mc_draws,
                  "draws for Monte-Carlo tables and SNR, default 500");
  cmd->add_option("--out-dir", o->out_dir, "output directory, default .");
  cmd->add_option("--methods", o->methods,
                  "override the method list, e.g. STRS,BSW-1.1,KF-2")
      ->delimiter(',');
  cmd->add_option("--threads", o->threads,
                  "worker threads (0 = hardware concurrency)");
  cmd->add_flag("--quiet", o->quiet, "suppress progress output");
}

rrr::RunOptions to_run_options(const CommonOpts& o) {
  rrr::RunOptions opts;
  opts.seed = o.seed;
  opts.reps = o.reps;
  opts.eps = o.eps;
  opts.mc_draws = o.mc_draws;
  opts.out_dir = o.out_dir;
  opts.methods = o.methods;
  opts.threads = o.threads;
  opts.quiet = o.quiet;
  return opts;
}

json trace_json(const rrr::SelfTuneTrace& trace) {
  json steps = json::array();
  for (const rrr::TuneStep& s : trace.steps) {
    json step{{"t", s.t}, {"lambda", s.lambda}, {"K", s.K}, {"k", s.k}};
    if (std::isfinite(s.R)) step["R"] = s.R;
    if (std::isfinite(s.U)) step["U"] = s.U;
    steps.push_back(std::move(step));
  }
  return json{{"variant", rrr::variant_name(trace.variant)},
              {"epsilon", trace.epsilon},
              {"N", trace.N},
              {"steps", std::move(steps)},
              {"converged", trace.converged},
              {"capped", trace.capped},
              {"selected_rank", trace.k_final()},
              {"lambda_final", trace.lambda_final()}};
}

int cmd_select(const std::string& y_path, const std::string& x_path,
               const std::string& method, std::optional<double> lambda,
               const CommonOpts& o) {
  const rrr::Matrix Y = rrr::read_matrix_csv(y_path);
  const int n = static_cast<int>(Y.rows());
  const int m = static_cast<int>(Y.cols());

  // Without a design the data are treated as the directly observed mean
  // plus noise: the projector is the identity and q is the row count.
  rrr::ProjectionOp P;
  int q = n;
  rrr::Vector d_sq;
  double resid_sq = 0.0;
  if (!x_path.empty()) {
    const rrr::Matrix X = rrr::read_matrix_csv(x_path);
    P = rrr::projection(X);
    q = P.rank_q;
    const rrr::Matrix coords = P.coords(Y);
    d_sq = rrr::singular_values(coords).array().square().matrix();
    resid_sq = (Y - P.basis * coords).squaredNorm();
  } else {
    d_sq = rrr::singular_values(Y).array().square().matrix();
  }

  json out{{"method", method}, {"n", n}, {"m", m}, {"q", q}};
  if (method == "grs") {
    double lam = lambda ? *lambda
                        : 2.0 * (1.0 + o.eps) *
                              std::pow(std::sqrt(static_cast<double>(m)) +
                                           std::sqrt(static_cast<double>(q)),
                                       2);
    rrr::CriterionInputs in;
    in.d_sq = d_sq;
    in.resid_sq = resid_sq;
    in.n = n;
    in.m = m;
    in.lambda = lam;
    const rrr::RankSelection sel = rrr::select_rank(in);
    out["lambda"] = lam;
    out["selected_rank"] = sel.k_hat;
    out["K_lambda"] = sel.K;
    out["count_form"] = sel.count_form;
    out["degenerate"] = sel.degenerate;
    out["sigma_sq_trace"] = sel.sigma_sq_trace;
  } else if (method == "strs") {
    const rrr::SingularMoments table =
        rrr::load_or_estimate_moments(q, m, o.mc_draws, o.seed);
    const rrr::SelfTuneTrace trace =
        rrr::strs_from_spectrum(d_sq, resid_sq, n, m, table, o.eps);
    out["trace"] = trace_json(trace);
    out["selected_rank"] = trace.k_final();
  } else if (method == "sstrs") {
    // The simplified rule always reads the raw spectrum of Y.
    const rrr::Vector raw_sq =
        rrr::singular_values(Y).array().square().matrix();
    const rrr::SelfTuneTrace trace =
        rrr::sstrs_from_spectrum(raw_sq, n, m, q, o.eps);
    out["trace"] = trace_json(trace);
    out["selected_rank"] = trace.k_final();
  } else if (method == "db") {
    const rrr::SelfTuneTrace trace =
        rrr::strs_db_from_spectrum(d_sq, resid_sq, n, m, q, o.eps);
    out["trace"] = trace_json(trace);
    out["selected_rank"] = trace.k_final();
  } else {
    throw std::invalid_argument("select: unknown method '" + method +
                                "' (grs, strs, sstrs, db)");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const std::string& scenario_path, int rep, bool with_snr,
                 const CommonOpts& o) {
  const rrr::SimScenario sc = rrr::read_scenario(scenario_path);
  const rrr::Instance inst = rrr::make_instance(sc, rep);
  fs::create_directories(o.out_dir);
  auto path = [&](const char* f) { return (fs::path(o.out_dir) / f).string(); };
  const std::string xf = path("X.csv"), af = path("A.csv"),
                    xaf = path("XA.csv"), yf = path("Y.csv");
  rrr::write_matrix_csv(xf, inst.X);
  rrr::write_matrix_csv(af, inst.A);
  rrr::write_matrix_csv(xaf, inst.XA);
  rrr::write_matrix_csv(yf, inst.Y);

  json out{{"scenario", scenario_path},
           {"replication", rep},
           {"files", {xf, af, xaf, yf}},
           {"design_rank", inst.P.rank_q}};
  json d = json::array();
  for (int j = 0; j < inst.d_XA.size(); ++j) d.push_back(inst.d_XA(j));
  out["d_XA"] = std::move(d);
  if (with_snr && sc.r >= 1) {
    out["snr"] = rrr::estimate_snr(inst, o.mc_draws);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_moments(int q, int m, const std::string& kind,
                const std::string& out_file, const CommonOpts& o) {
  if (kind == "moments") {
    const rrr::SingularMoments table =
        rrr::load_or_estimate_moments(q, m, o.mc_draws, o.seed);
    if (!out_file.empty()) {
      rrr::save_moments_csv(out_file, table);
      std::cout << "wrote " << out_file << "\n";
    } else {
      std::cout << "q,m,j,S_j,mc_draws,seed\n";
      for (int j = 1; j <= table.N(); ++j) {
        std::cout << table.q << ',' << table.m << ',' << j << ','
                  << rrr::format_double(table.at(j)) << ',' << table.mc_draws
                  << ',' << table.seed << "\n";
      }
    }
  } else if (kind == "gnorm") {
    const rrr::KfConfig cfg =
        rrr::estimate_g_norms(q, m, o.mc_draws, o.seed);
    std::cout << "q,m,k,g_norm_sq,mc_draws,seed\n";
    for (size_t k = 0; k < cfg.g_norm_sq.size(); ++k) {
      std::cout << cfg.q << ',' << cfg.m << ',' << k + 1 << ','
                << rrr::format_double(cfg.g_norm_sq[k]) << ',' << cfg.mc_draws
                << ',' << cfg.seed << "\n";
    }
    if (!out_file.empty()) {
      std::cerr << "note: --out applies to the moments table only\n";
    }
  } else {
    throw std::invalid_argument("moments: unknown kind '" + kind +
                                "' (moments, gnorm)");
  }
  return 0;
}

int cmd_experiment(const std::string& name, const CommonOpts& o) {
  const rrr::ExperimentResult res =
      rrr::run_experiment(name, to_run_options(o));
  json out{{"experiment", res.name},
           {"records", res.records.size()},
           {"report_rows", res.report.size()},
           {"files", res.files}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_file) {
  std::vector<rrr::ReplicationRecord> all;
  for (const std::string& path : inputs) {
    std::vector<rrr::ReplicationRecord> part = rrr::read_records_csv(path);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  const std::vector<rrr::ReportRow> rows = rrr::aggregate(all);
  rrr::write_report_csv(out_file, rows);
  std::cout << "aggregated " << all.size() << " records from "
            << inputs.size() << " file(s) into " << rows.size()
            << " rows: " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Adaptive rank selection for reduced-rank multivariate regression"};
  app.require_subcommand(1);

  CommonOpts co;

  // select
  auto* sel = app.add_subcommand(
      "select", "choose a rank for a response matrix, print JSON");
  std::string y_path, x_path, method = "grs";
  std::optional<double> lambda;
  sel->add_option("--y", y_path, "response matrix CSV")->required();
  sel->add_option("--x", x_path,
                  "design matrix CSV (omitted: identity design)");
  sel->add_option("--method", method, "grs, strs, sstrs or db (default grs)");
  double lambda_raw = 0.0;
  auto* lam_opt = sel->add_option(
      "--lambda", lambda_raw, "penalty for grs (default 2(1+eps)(sqrt m + sqrt q)^2)");
  add_common(sel, &co);

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "draw one instance from a scenario file, write CSVs");
  std::string scenario_path;
  int rep = 0;
  bool with_snr = false;
  sim->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  sim->add_option("--rep", rep, "replication index (default 0)");
  sim->add_flag("--snr", with_snr, "estimate the SNR (uses --mc-draws)");
  add_common(sim, &co);

  // moments
  auto* mom = app.add_subcommand(
      "moments", "build or inspect the Monte-Carlo singular value tables");
  int mq = 0, mm = 0;
  std::string kind = "moments", mom_out;
  mom->add_option("--q", mq, "rows of the Gaussian reference matrix")
      ->required();
  mom->add_option("--m", mm, "columns of the Gaussian reference matrix")
      ->required();
  mom->add_option("--kind", kind, "moments (default) or gnorm");
  mom->add_option("--out", mom_out, "write the table to this CSV path");
  add_common(mom, &co);

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a named study");
  std::string exp_name;
  std::string names;
  for (const std::string& n : rrr::experiment_names()) {
    names += names.empty() ? n : ", " + n;
  }
  exp->add_option("name", exp_name, "one of: " + names)->required();
  add_common(exp, &co);

  // report
  auto* rep_cmd = app.add_subcommand(
      "report", "aggregate record CSVs into a recovery report");
  std::vector<std::string> report_inputs;
  std::string report_out = "report.csv";
  rep_cmd->add_option("inputs", report_inputs, "record CSV files")
      ->required()
      ->expected(-1);
  rep_cmd->add_option("--out", report_out,
                      "output CSV path (default report.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sel->parsed()) {
      if (lam_opt->count() > 0) lambda = lambda_raw;
      return cmd_select(y_path, x_path, method, lambda, co);
    }
    if (sim->parsed()) return cmd_simulate(scenario_path, rep, with_snr, co);
    if (mom->parsed()) return cmd_moments(mq, mm, kind, mom_out, co);
    if (exp->parsed()) return cmd_experiment(exp_name, co);
    if (rep_cmd->parsed()) return cmd_report(report_inputs, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
