#include "nmf_cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "nmf/serialize.hpp"
#include "nmf_cli/svg.hpp"

namespace nmf::cli {
namespace {

using nlohmann::json;

struct Solved {
  ConvexityReport report;
  std::unique_ptr<ScalarModel> model;
  FixedPointSolution sol;
};

// Certify, build the scalar model and solve. Returns a finished CommandResult
// in `early` when the run must stop.
bool solve_pipeline(const RunConfig& cfg, Solved& s, CommandResult& early, json& doc) {
  const ProblemSpec problem = cfg.problem();
  s.report = check_convexity(problem.prior(), problem.sigma2());
  doc["convexity"] = s.report;
  if (!s.report.certified) {
    doc["error"] = "effective penalty is not certified strongly convex";
    early.code = kNotCertified;
    early.error = doc["error"].get<std::string>();
    early.text = doc.dump(2);
    return false;
  }
  s.model = std::make_unique<ScalarModel>(problem, cfg.quad, s.report);
  try {
    s.sol = solve(*s.model, cfg.fp);
  } catch (const FixedPointNoConvergence& e) {
    doc["error"] = e.what();
    json starts = json::array();
    for (const auto& st : e.starts()) starts.push_back(st);
    doc["starts"] = starts;
    early.code = kNoConvergence;
    early.error = e.what();
    early.text = doc.dump(2);
    return false;
  }
  doc["solution"] = s.sol;
  if (!s.sol.multi_start_agreement) {
    early.warnings.push_back("fixed-point starts disagree; the candidate maximizing psi was selected");
  }
  return true;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

json metric_row(std::optional<double> predicted, const std::vector<double>& emp) {
  json j{{"empirical_mean", mean_of(emp)}, {"empirical_sd", sd_of(emp)}};
  if (predicted) {
    j["predicted"] = *predicted;
    j["rel_gap"] = std::abs(mean_of(emp) - *predicted) / std::abs(*predicted);
  } else {
    j["predicted"] = nullptr;
    j["rel_gap"] = nullptr;
  }
  return j;
}

std::string zeta_key(double z) { return json(z).dump(); }

void save_first_dataset(const RunConfig& cfg, const ProblemSpec& problem) {
  if (cfg.dataset_out.empty()) return;
  const SimConfig sc = cfg.sim_config();
  save_dataset(cfg.dataset_out, gen_data(problem, sc, sc.seed));
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

struct SweepRow {
  double axis = 0.0;
  double b_star = NAN;
  double tau_star = NAN;
  double mse = NAN;
  double neg_log_z = NAN;
  double coverage_95 = NAN;
  std::string converged = "NA";
  std::string agreement = "NA";
  bool na = true;
};

SweepRow sweep_point(const RunConfig& base, double value) {
  SweepRow row;
  row.axis = value;
  RunConfig cfg = base;
  if (cfg.sweep.axis == "q") {
    cfg.prior.q = value;
  } else if (cfg.sweep.axis == "delta2") {
    cfg.prior.delta2 = value;
  } else if (cfg.sweep.axis == "alpha") {
    cfg.alpha = value;
  } else {
    cfg.sigma2 = value;
  }
  try {
    const ProblemSpec problem = cfg.problem();
    const ConvexityReport report = check_convexity(problem.prior(), problem.sigma2());
    if (!report.certified) return row;
    const ScalarModel model(problem, cfg.quad, report);
    FixedPointSolution sol;
    try {
      sol = solve(model, cfg.fp);
    } catch (const NoConvergence&) {
      row.converged = "false";
      return row;
    }
    row.b_star = sol.b_star;
    row.tau_star = sol.tau_star;
    row.mse = predict_mse(model, sol);
    row.neg_log_z = predict_neg_log_z(model, sol);
    row.coverage_95 = predict_coverage(model, sol, 0.05);
    row.converged = "true";
    row.agreement = sol.multi_start_agreement ? "true" : "false";
    row.na = false;
  } catch (const Error&) {
  }
  return row;
}

int resolve_threads(int flag) {
  int n = flag;
  if (n < 0) {
    const char* env = std::getenv("NMF_THREADS");
    n = 0;
    if (env && *env) {
      try {
        n = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigError("NMF_THREADS must be an integer");
      }
    }
  }
  if (n < 0) throw ConfigError("--threads must be nonnegative");
  return n == 0 ? omp_get_num_procs() : n;
}

}  // namespace

std::string sweep_csv_header() {
  return "axis_value,b_star,tau_star,mse,neg_log_z,coverage_95,converged,multi_start_agreement";
}

CommandResult cmd_check_convexity(const RunConfig& cfg) {
  const ProblemSpec problem = cfg.problem();
  const ConvexityReport r = check_convexity(problem.prior(), problem.sigma2());
  json doc = r;
  doc["config"] = to_json(cfg);
  return {r.certified ? kOk : kNotCertified, doc.dump(2), {}, {}};
}

CommandResult cmd_solve(const RunConfig& cfg, bool with_traces) {
  CommandResult res;
  json doc{{"config", to_json(cfg)}};
  Solved s;
  if (!solve_pipeline(cfg, s, res, doc)) return res;
  doc["solution"] = solution_json(s.sol, with_traces);
  const Diagnostics d = diagnose(*s.model, s.sol.b_star, s.sol.tau_star);
  doc["diagnostics"] = d;
  if (!d.ok()) {
    doc["error"] = "fixed-point verification failed";
    res.error = doc["error"].get<std::string>();
    res.code = kNotCertified;
  }
  doc["warnings"] = res.warnings;
  res.text = doc.dump(2);
  return res;
}

CommandResult cmd_predict(const RunConfig& cfg, bool csv) {
  CommandResult res;
  json doc{{"config", to_json(cfg)}};
  Solved s;
  if (!solve_pipeline(cfg, s, res, doc)) return res;
  const Predictions p = predict(*s.model, s.sol, cfg.sim.zeta_list);
  for (const auto& w : p.warnings) res.warnings.push_back(w);
  if (csv) {
    res.text = predictions_csv_header() + "\n" + predictions_csv_row(*s.model, s.sol, p) + "\n";
    return res;
  }
  doc["predictions"] = p;
  doc["warnings"] = res.warnings;
  res.text = doc.dump(2);
  return res;
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  CommandResult res;
  json doc{{"config", to_json(cfg)}};
  Solved s;
  if (!solve_pipeline(cfg, s, res, doc)) return res;
  const std::vector<SimResult> reps = run_replicates(*s.model, s.sol, cfg.sim_config());
  save_first_dataset(cfg, s.model->problem());
  doc["replicates"] = reps;
  for (const auto& r : reps) {
    if (!r.converged) res.warnings.push_back("replicate seed " + std::to_string(r.seed) + " did not reach grad_tol");
  }
  doc["warnings"] = res.warnings;
  res.text = doc.dump(2);
  return res;
}

CommandResult cmd_compare(const RunConfig& cfg) {
  CommandResult res;
  json doc{{"config", to_json(cfg)}};
  Solved s;
  if (!solve_pipeline(cfg, s, res, doc)) return res;
  const SimConfig sc = cfg.sim_config();
  const Predictions p = predict(*s.model, s.sol, sc.zeta_list);
  for (const auto& w : p.warnings) res.warnings.push_back(w);
  const std::vector<SimResult> reps = run_replicates(*s.model, s.sol, sc);
  save_first_dataset(cfg, s.model->problem());

  auto collect = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : reps) v.push_back(get(r));
    return v;
  };
  json metrics;
  metrics["mse"] = metric_row(p.mse, collect([](const SimResult& r) { return r.mse_emp; }));
  metrics["neg_log_z"] =
      metric_row(p.neg_log_z_per_p, collect([](const SimResult& r) { return r.neg_log_z_nmf_per_p; }));
  if (s.model->problem().prior().as<GaussianMeanZero>()) {
    metrics["neg_log_z_exact"] =
        metric_row(std::nullopt, collect([](const SimResult& r) { return *r.neg_log_z_exact_per_p; }));
  }
  for (std::size_t k = 0; k < sc.zeta_list.size(); ++k) {
    const std::string key = zeta_key(sc.zeta_list[k]);
    metrics["coverage_" + key] =
        metric_row(p.coverage[k], collect([k](const SimResult& r) { return r.coverage_emp[k]; }));
    metrics["corrected_coverage_" + key] = metric_row(
        p.corrected_coverage[k], collect([k](const SimResult& r) { return r.coverage_corrected_emp[k]; }));
  }
  metrics["w2_sliced"] = metric_row(std::nullopt, collect([](const SimResult& r) { return r.w2_sliced; }));
  doc["predictions"] = p;
  doc["metrics"] = metrics;
  doc["replicates"] = reps;
  doc["warnings"] = res.warnings;
  res.text = doc.dump(2);
  return res;
}

CommandResult cmd_sweep(const RunConfig& cfg, const std::string& svg_path) {
  const auto& grid = cfg.sweep.grid;
  std::vector<SweepRow> rows(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < grid.size(); ++i) rows[i] = sweep_point(cfg, grid[i]);

  CommandResult res;
  std::ostringstream os;
  os << sweep_csv_header() << '\n';
  int na = 0;
  for (const auto& r : rows) {
    if (r.na) ++na;
    os << fmt(r.axis) << ',' << fmt(r.b_star) << ',' << fmt(r.tau_star) << ',' << fmt(r.mse) << ','
       << fmt(r.neg_log_z) << ',' << fmt(r.coverage_95) << ',' << r.converged << ',' << r.agreement << '\n';
  }
  res.text = os.str();
  if (na > 0) res.warnings.push_back(std::to_string(na) + " grid point(s) produced NA rows");

  if (!svg_path.empty()) {
    std::vector<Series> series;
    for (const auto& m : cfg.sweep.metrics) {
      Series s;
      s.name = m;
      for (const auto& r : rows) {
        s.x.push_back(r.axis);
        if (m == "b_star") s.y.push_back(r.b_star);
        if (m == "tau_star") s.y.push_back(r.tau_star);
        if (m == "mse") s.y.push_back(r.mse);
        if (m == "neg_log_z") s.y.push_back(r.neg_log_z);
        if (m == "coverage_95") s.y.push_back(r.coverage_95);
      }
      series.push_back(std::move(s));
    }
    std::ofstream f(svg_path);
    if (!f) throw ConfigError("cannot write " + svg_path);
    f << line_chart_svg("prediction sweep over " + cfg.sweep.axis, cfg.sweep.axis, "value", series);
  }
  return res;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field variational inference asymptotics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  int threads = -1;
  bool csv = false;
  bool traces = false;

  std::vector<CLI::App*> subs;
  for (const char* name : {"check-convexity", "solve", "predict", "simulate", "compare", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI or JSON config file")->required();
    sub->add_option("--out", out_path, "output path (default stdout)");
    sub->add_option("--seed", seed, "override sim.seed");
    sub->add_option("--threads", threads, "worker threads, 0 = all");
    subs.push_back(sub);
  }
  subs[1]->add_flag("--traces", traces, "include every start's iterates");
  subs[2]->add_flag("--csv", csv, "emit a CSV row instead of JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  std::string command;
  for (auto* sub : subs) {
    if (sub->parsed()) command = sub->get_name();
  }

  try {
    omp_set_num_threads(resolve_threads(threads));
    RunConfig cfg = resolve(read_config_file(config_path));
    if (app.get_subcommand(command)->count("--seed")) cfg.sim.seed = seed;

    CommandResult res;
    if (command == "check-convexity") {
      res = cmd_check_convexity(cfg);
    } else if (command == "solve") {
      res = cmd_solve(cfg, traces);
    } else if (command == "predict") {
      res = cmd_predict(cfg, csv);
    } else if (command == "simulate") {
      res = cmd_simulate(cfg);
    } else if (command == "compare") {
      res = cmd_compare(cfg);
    } else {
      std::string svg = cfg.sweep.svg;
      if (svg.empty() && !out_path.empty() && out_path != "-") {
        const auto dot = out_path.find_last_of('.');
        svg = (dot == std::string::npos ? out_path : out_path.substr(0, dot)) + ".svg";
      }
      res = cmd_sweep(cfg, svg);
    }
    for (const auto& w : res.warnings) err << "warning: " << w << '\n';
    if (!res.error.empty()) err << "error: " << res.error << '\n';
    if (out_path.empty() || out_path == "-") {
      out << res.text;
      if (!res.text.empty() && res.text.back() != '\n') out << '\n';
    } else {
      std::ofstream f(out_path);
      if (!f) throw ConfigError("cannot write " + out_path);
      f << res.text;
      if (!res.text.empty() && res.text.back() != '\n') f << '\n';
    }
    return res.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NotConvexCertified& e) {
    err << "error: " << e.what() << '\n';
    return kNotCertified;
  } catch (const NoConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNotCertified;
  }
}

}  // namespace nmf::cli
