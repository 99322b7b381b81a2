// Command-line driver: solve, pareto-curve, experiment, verify.
//
// Configuration comes from a key-value file (--config) with per-key flag
// overrides; `--help` lists the keys.  Exit codes: 0 success, 1 solver
// failure, 2 verification failure, 3 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "levelset/experiment.hpp"
#include "levelset/value_fn.hpp"

namespace {

namespace fs = std::filesystem;
using namespace levelset;

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitVerificationFailure = 2;
constexpr int kExitConfigError = 3;

// Every config key, exposed 1:1 as a --key flag that overrides the file.
const std::vector<std::pair<const char*, const char*>> kConfigKeys = {
    {"instance", "instance kind: bpdn | figure1 | csv"},
    {"a-csv", "path to the measurement matrix (instance = csv)"},
    {"b-csv", "path to the observation vector (instance = csv)"},
    {"m", "number of measurements"},
    {"n", "signal dimension"},
    {"k", "true support size"},
    {"variance", "matrix entry variance"},
    {"noise-std", "dense noise standard deviation"},
    {"outlier-count", "number of outliers"},
    {"outlier-std", "outlier standard deviation"},
    {"misfits", "comma list of misfit descriptors"},
    {"regularizer", "regularizer descriptor"},
    {"seed", "base random seed"},
    {"replicates", "number of seed replicates (experiment)"},
    {"output-dir", "artifact directory"},
    {"tau", "level-set budget (solve)"},
    {"sigma", "residual target (solve)"},
    {"tau-grid", "comma list of taus (pareto-curve)"},
    {"spg-max-iter", "inner solver iteration cap"},
    {"spg-tol", "inner solver tolerance"},
    {"spg-memory", "nonmonotone line-search window"},
    {"spg-alpha-min", "spectral step lower clamp"},
    {"spg-alpha-max", "spectral step upper clamp"},
    {"spg-decrease", "sufficient-decrease constant"},
    {"newton-rtol", "root-finding relative tolerance"},
    {"newton-max-iter", "root-finding iteration cap"},
    {"newton-theta", "inexactness factor for inner tolerances"},
    {"newton-tol-min", "floor for inner tolerances"},
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

struct BuiltProblem {
  ProblemSpec problem;
  Vector x0;  // empty when the true signal is unknown
};

BuiltProblem build_problem(const ExperimentConfig& cfg) {
  const Misfit misfit = Misfit::parse(cfg.misfits.front());
  const Regularizer reg = Regularizer::parse(cfg.regularizer);
  if (cfg.instance == "figure1") {
    ProblemSpec problem = figure1_instance();
    problem.misfit = misfit;
    problem.reg = reg;
    return {std::move(problem), Vector()};
  }
  if (cfg.instance == "csv") {
    Matrix a = load_matrix_csv(cfg.a_csv);
    Vector b = load_vector_csv(cfg.b_csv);
    ProblemSpec problem{LinearOperator(std::move(a)), std::move(b), misfit, reg};
    problem.validate();
    return {std::move(problem), Vector()};
  }
  InstanceBundle bundle = generate_bpdn_instance(cfg);
  ProblemSpec problem{bundle.op, bundle.b, misfit, reg};
  return {std::move(problem), std::move(bundle.x0)};
}

double parse_grid_entry(const std::string& item) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(item, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != item.size()) {
    throw std::invalid_argument("config: bad tau-grid entry '" + item + "'");
  }
  return parsed;
}

std::vector<double> parse_tau_grid(const ExperimentConfig& cfg,
                                   const BuiltProblem& built) {
  std::vector<double> taus;
  if (!cfg.tau_grid.empty()) {
    std::string_view rest = cfg.tau_grid;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      taus.push_back(parse_grid_entry(std::string(rest.substr(0, comma))));
      rest = (comma == std::string_view::npos) ? std::string_view{}
                                               : rest.substr(comma + 1);
    }
    return taus;
  }
  if (cfg.instance == "figure1") {
    for (double t = 0.0; t <= 3.0 + 1e-12; t += 0.5) taus.push_back(t);
    return taus;
  }
  if (cfg.instance == "bpdn") {
    const double top = 0.75 * built.x0.lpNorm<1>();
    for (int i = 0; i <= 15; ++i) taus.push_back(top * i / 15.0);
    return taus;
  }
  throw std::invalid_argument("config: csv instance needs an explicit tau-grid");
}

void write_signals(const fs::path& path, const Vector& x0, const Vector& xhat,
                   const Vector& residual) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "x0,xhat,residual\n";
  const Index rows =
      std::max(std::max(x0.size(), xhat.size()), residual.size());
  for (Index i = 0; i < rows; ++i) {
    if (i < x0.size()) out << x0[i];
    out << ',';
    if (i < xhat.size()) out << xhat[i];
    out << ',';
    if (i < residual.size()) out << residual[i];
    out << '\n';
  }
  write_file(path, out.str());
}

int run_solve(const ExperimentConfig& cfg) {
  if (cfg.tau.has_value() == cfg.sigma.has_value()) {
    throw std::invalid_argument(
        "config: solve needs exactly one of tau (evaluate) or sigma "
        "(root-find)");
  }
  const BuiltProblem built = build_problem(cfg);
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);

  nlohmann::json doc;
  doc["instance"] = cfg.instance;
  doc["misfit"] = cfg.misfits.front();
  doc["regularizer"] = cfg.regularizer;

  bool solver_ok = true;
  if (cfg.tau) {
    SpgOptions opts = cfg.spg;
    opts.keep_history = true;
    const SpgResult res = solve_subproblem(built.problem, *cfg.tau, opts);
    {
      std::ostringstream trace;
      write_spg_trace_csv(trace, res.history);
      write_file(root / "trace.csv", trace.str());
    }
    const ValueSample sample =
        evaluate(built.problem, *cfg.tau, cfg.spg.tolerance, cfg.spg, res.x);
    doc["tau"] = sample.tau;
    doc["value"] = sample.v;
    doc["mu"] = sample.mu;
    doc["branch"] = to_string(sample.branch);
    if (sample.duality_gap) {
      doc["duality_gap"] = *sample.duality_gap;
    } else {
      doc["duality_gap"] = nullptr;
    }
    doc["differentiable"] = sample.differentiable;
    doc["status"] = to_string(sample.solver_status);
    doc["iterations"] = sample.iterations;
    doc["pg_norm"] = sample.pg_norm;
    doc["feasibility"] = sample.feasibility;
    doc["stationarity"] = sample.stationarity;
    write_signals(root / "signals.csv", built.x0, sample.x, sample.r);
    solver_ok = sample.solver_status != SpgStatus::max_iter;
  } else {
    ParetoOptions popts = cfg.newton;
    popts.inner = cfg.spg;
    const auto [xhat, trace] =
        solve_constrained(built.problem, *cfg.sigma, popts);
    {
      std::ostringstream out;
      write_pareto_csv(out, trace);
      write_file(root / "trace.csv", out.str());
    }
    doc["sigma"] = *cfg.sigma;
    doc["tau_star"] = trace.tau_star;
    doc["value"] = trace.v_star;
    doc["status"] = to_string(trace.status);
    doc["newton_iterations"] =
        trace.steps.empty() ? 0 : trace.steps.back().k;
    doc["inner_iterations"] = trace.total_inner_iterations;
    const Vector residual = built.problem.b - built.problem.op.apply(xhat);
    write_signals(root / "signals.csv", built.x0, xhat, residual);
    solver_ok = trace.status == ParetoStatus::converged;
  }
  write_file(root / "summary.json", doc.dump(2) + "\n");
  std::cout << doc.dump(2) << "\n";
  return solver_ok ? kExitOk : kExitSolverFailure;
}

int run_pareto_curve(const ExperimentConfig& cfg) {
  const BuiltProblem built = build_problem(cfg);
  const std::vector<double> taus = parse_tau_grid(cfg, built);
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);

  const std::vector<ValueSample> rows =
      sweep(built.problem, taus, cfg.spg.tolerance, cfg.spg);
  {
    std::ostringstream out;
    write_sweep_csv(out, rows);
    write_file(root / "curve.csv", out.str());
  }
  nlohmann::json doc;
  doc["instance"] = cfg.instance;
  doc["misfit"] = cfg.misfits.front();
  doc["regularizer"] = cfg.regularizer;
  doc["points"] = nlohmann::json::array();
  bool solver_ok = true;
  for (const auto& row : rows) {
    doc["points"].push_back({{"tau", row.tau},
                             {"value", row.v},
                             {"mu", row.mu},
                             {"status", to_string(row.solver_status)},
                             {"iterations", row.iterations}});
    solver_ok = solver_ok && row.solver_status != SpgStatus::max_iter;
  }
  write_file(root / "summary.json", doc.dump(2) + "\n");
  std::cout << "wrote " << (root / "curve.csv").string() << " ("
            << rows.size() << " points)\n";
  return solver_ok ? kExitOk : kExitSolverFailure;
}

int run_experiment_verb(const ExperimentConfig& cfg) {
  const ExperimentResult result = run_experiment(cfg);
  for (const auto& agg : result.aggregates) {
    std::cout << agg.misfit
              << ": median relative error = " << agg.median_relative_error
              << " (" << agg.failures << " failures over "
              << agg.runs.size() << " seeds)\n";
  }
  std::cout << "artifacts under " << cfg.output_dir << "\n";
  return result.all_ok ? kExitOk : kExitSolverFailure;
}

int run_verify(const ExperimentConfig& cfg) {
  const VerifySummary summary = verify_all(cfg);
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  write_file(root / "verify.json", reports_to_json(summary) + "\n");
  std::cout << summary.reports.size() << " checks, " << summary.failures
            << " failures; report at " << (root / "verify.json").string()
            << "\n";
  if (!summary.all_passed) {
    for (const auto& report : summary.reports) {
      if (!report.passed) {
        std::cout << "FAIL " << report.quantity
                  << ": oracle=" << report.oracle_value
                  << " library=" << report.library_value
                  << " |diff|=" << report.abs_discrepancy << "\n";
      }
    }
  }
  return summary.all_passed ? kExitOk : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Level-set solver for regularized data fitting: value functions, "
      "Pareto root-finding, and recovery experiments"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key-value config file")
      ->check(CLI::ExistingFile);

  // Flags mirror config keys; collected in command-line order and applied
  // after the file so they override it.
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& [key, help] : kConfigKeys) {
    const std::string name = std::string("--") + key;
    app.add_option_function<std::string>(
        name,
        [&overrides, key = std::string(key)](const std::string& value) {
          overrides.emplace_back(key, value);
        },
        help);
  }

  CLI::App* solve = app.add_subcommand(
      "solve", "evaluate v(b,tau) at --tau, or root-find v(b,tau)=--sigma");
  CLI::App* curve =
      app.add_subcommand("pareto-curve", "sweep v over a tau grid");
  CLI::App* experiment = app.add_subcommand(
      "experiment", "run the sparse recovery comparison across misfits");
  CLI::App* verify = app.add_subcommand(
      "verify", "run oracle comparisons and inverse-function checks");
  for (CLI::App* sub : {solve, curve, experiment, verify}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help_request) {
    return app.exit(help_request);
  } catch (const CLI::CallForVersion& version_request) {
    return app.exit(version_request);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitConfigError;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ExperimentConfig::load_file(config_path);
    for (const auto& [key, value] : overrides) cfg.set_key(key, value);
    cfg.validate();

    if (solve->parsed()) return run_solve(cfg);
    if (curve->parsed()) return run_pareto_curve(cfg);
    if (experiment->parsed()) return run_experiment_verb(cfg);
    return run_verify(cfg);
  } catch (const std::invalid_argument& err) {
    std::cerr << "configuration error: " << err.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitSolverFailure;
  }
}
