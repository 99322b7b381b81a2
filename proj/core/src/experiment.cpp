#include "levelset/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kv_params.hpp"
#include "levelset/rng.hpp"
#include "levelset/value_fn.hpp"

namespace levelset {

namespace {

namespace fs = std::filesystem;

std::string format_double(double x) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << x;
  return out.str();
}

long long parse_int(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size()) {
    throw std::invalid_argument("config: bad integer value '" + value +
                                "' for key '" + key + "'");
  }
  return parsed;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  unsigned long long parsed = 0;
  try {
    parsed = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size() || value.find('-') != std::string::npos) {
    throw std::invalid_argument("config: bad unsigned value '" + value +
                                "' for key '" + key + "'");
  }
  return parsed;
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string item = trim(std::string(rest.substr(0, comma)));
    if (!item.empty()) out.push_back(std::move(item));
    rest = (comma == std::string_view::npos) ? std::string_view{}
                                             : rest.substr(comma + 1);
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    out += items[i];
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() +
                             "' for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid]
                                : 0.5 * (values[mid - 1] + values[mid]);
}

nlohmann::json run_to_json(const RunSummary& run) {
  return {{"seed", run.seed},
          {"misfit", run.misfit},
          {"ok", run.ok},
          {"error", run.error},
          {"sigma", run.sigma},
          {"tau_star", run.tau_star},
          {"value", run.value},
          {"relative_error", run.relative_error},
          {"support_precision", run.support_precision},
          {"support_recall", run.support_recall},
          {"newton_iterations", run.newton_iterations},
          {"inner_iterations", run.inner_iterations},
          {"status", run.status}};
}

void write_signals_csv(const fs::path& path, const Vector& x0,
                       const Vector& xhat, const Vector& residual) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "x0,xhat,residual\n";
  const Index rows = std::max(x0.size(), residual.size());
  for (Index i = 0; i < rows; ++i) {
    if (i < x0.size()) out << x0[i];
    out << ',';
    if (i < xhat.size()) out << xhat[i];
    out << ',';
    if (i < residual.size()) out << residual[i];
    out << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (instance != "bpdn" && instance != "figure1" && instance != "csv") {
    throw std::invalid_argument("config: instance must be bpdn, figure1, or csv");
  }
  if (instance == "csv" && (a_csv.empty() || b_csv.empty())) {
    throw std::invalid_argument("config: csv instance needs a-csv and b-csv");
  }
  if (m < 1 || n < 1) throw std::invalid_argument("config: m, n must be >= 1");
  if (k < 0 || k > n) {
    throw std::invalid_argument("config: need 0 <= k <= n");
  }
  if (!(variance > 0.0)) {
    throw std::invalid_argument("config: variance must be positive");
  }
  if (noise_std < 0.0 || outlier_std < 0.0) {
    throw std::invalid_argument("config: stds must be >= 0");
  }
  if (outlier_count < 0 || outlier_count > m) {
    throw std::invalid_argument("config: need 0 <= outlier-count <= m");
  }
  if (misfits.empty()) {
    throw std::invalid_argument("config: misfits must be nonempty");
  }
  for (const auto& descriptor : misfits) Misfit::parse(descriptor);
  Regularizer::parse(regularizer);
  if (replicates < 1) {
    throw std::invalid_argument("config: replicates must be >= 1");
  }
  if (output_dir.empty()) {
    throw std::invalid_argument("config: output-dir must be nonempty");
  }
  if (tau && *tau < 0.0) throw std::invalid_argument("config: tau must be >= 0");
  if (sigma && *sigma < 0.0) {
    throw std::invalid_argument("config: sigma must be >= 0");
  }
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "instance = " << instance << "\n";
  if (!a_csv.empty()) out << "a-csv = " << a_csv << "\n";
  if (!b_csv.empty()) out << "b-csv = " << b_csv << "\n";
  out << "m = " << m << "\n";
  out << "n = " << n << "\n";
  out << "k = " << k << "\n";
  out << "variance = " << format_double(variance) << "\n";
  out << "noise-std = " << format_double(noise_std) << "\n";
  out << "outlier-count = " << outlier_count << "\n";
  out << "outlier-std = " << format_double(outlier_std) << "\n";
  out << "misfits = " << join_list(misfits) << "\n";
  out << "regularizer = " << regularizer << "\n";
  out << "seed = " << seed << "\n";
  out << "replicates = " << replicates << "\n";
  out << "output-dir = " << output_dir << "\n";
  if (tau) out << "tau = " << format_double(*tau) << "\n";
  if (sigma) out << "sigma = " << format_double(*sigma) << "\n";
  if (!tau_grid.empty()) out << "tau-grid = " << tau_grid << "\n";
  out << "spg-max-iter = " << spg.max_iterations << "\n";
  out << "spg-tol = " << format_double(spg.tolerance) << "\n";
  out << "spg-memory = " << spg.memory << "\n";
  out << "spg-alpha-min = " << format_double(spg.alpha_min) << "\n";
  out << "spg-alpha-max = " << format_double(spg.alpha_max) << "\n";
  out << "spg-decrease = " << format_double(spg.sufficient_decrease) << "\n";
  out << "newton-rtol = " << format_double(newton.rtol) << "\n";
  out << "newton-max-iter = " << newton.max_iterations << "\n";
  out << "newton-theta = " << format_double(newton.theta) << "\n";
  out << "newton-tol-min = " << format_double(newton.tol_min) << "\n";
  return out.str();
}

void ExperimentConfig::set_key(const std::string& key,
                               const std::string& value) {
  using detail::parse_double;
  if (key == "instance") {
    instance = value;
  } else if (key == "a-csv") {
    a_csv = value;
  } else if (key == "b-csv") {
    b_csv = value;
  } else if (key == "m") {
    m = static_cast<Index>(parse_int(value, key));
  } else if (key == "n") {
    n = static_cast<Index>(parse_int(value, key));
  } else if (key == "k") {
    k = static_cast<Index>(parse_int(value, key));
  } else if (key == "variance") {
    variance = parse_double(value, "config", key);
  } else if (key == "noise-std") {
    noise_std = parse_double(value, "config", key);
  } else if (key == "outlier-count") {
    outlier_count = static_cast<int>(parse_int(value, key));
  } else if (key == "outlier-std") {
    outlier_std = parse_double(value, "config", key);
  } else if (key == "misfits") {
    misfits = split_list(value);
  } else if (key == "regularizer") {
    regularizer = value;
  } else if (key == "seed") {
    seed = parse_u64(value, key);
  } else if (key == "replicates") {
    replicates = static_cast<int>(parse_int(value, key));
  } else if (key == "output-dir") {
    output_dir = value;
  } else if (key == "tau") {
    tau = parse_double(value, "config", key);
  } else if (key == "sigma") {
    sigma = parse_double(value, "config", key);
  } else if (key == "tau-grid") {
    tau_grid = value;
  } else if (key == "spg-max-iter") {
    spg.max_iterations = static_cast<int>(parse_int(value, key));
  } else if (key == "spg-tol") {
    spg.tolerance = parse_double(value, "config", key);
  } else if (key == "spg-memory") {
    spg.memory = static_cast<int>(parse_int(value, key));
  } else if (key == "spg-alpha-min") {
    spg.alpha_min = parse_double(value, "config", key);
  } else if (key == "spg-alpha-max") {
    spg.alpha_max = parse_double(value, "config", key);
  } else if (key == "spg-decrease") {
    spg.sufficient_decrease = parse_double(value, "config", key);
  } else if (key == "newton-rtol") {
    newton.rtol = parse_double(value, "config", key);
  } else if (key == "newton-max-iter") {
    newton.max_iterations = static_cast<int>(parse_int(value, key));
  } else if (key == "newton-theta") {
    newton.theta = parse_double(value, "config", key);
  } else if (key == "newton-tol-min") {
    newton.tol_min = parse_double(value, "config", key);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: empty key on line " +
                                  std::to_string(lineno));
    }
    cfg.set_key(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot read '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

double InstanceBundle::sigma_for(const Misfit& misfit) const {
  return misfit.value(w + zeta);
}

InstanceBundle generate_bpdn_instance(const ExperimentConfig& cfg) {
  return generate_bpdn_instance(cfg, cfg.seed);
}

InstanceBundle generate_bpdn_instance(const ExperimentConfig& cfg,
                                      std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);

  // Draw order is part of the reproducibility contract: matrix seed,
  // support, magnitudes, noise, outlier positions, outlier values.
  const std::uint64_t matrix_seed = rng.next_u64();
  InstanceBundle bundle;
  bundle.op = gaussian_ensemble(cfg.m, cfg.n, cfg.variance, matrix_seed);

  bundle.x0 = Vector::Zero(cfg.n);
  const auto support = rng.sample_indices(static_cast<std::size_t>(cfg.n),
                                          static_cast<std::size_t>(cfg.k));
  for (const std::size_t idx : support) {
    double g = rng.normal();
    while (g == 0.0) g = rng.normal();  // keep the support size exact
    bundle.x0[static_cast<Index>(idx)] = std::abs(g);
  }

  bundle.w = Vector::Zero(cfg.m);
  for (Index i = 0; i < cfg.m; ++i) bundle.w[i] = cfg.noise_std * rng.normal();

  bundle.zeta = Vector::Zero(cfg.m);
  const auto positions = rng.sample_indices(
      static_cast<std::size_t>(cfg.m), static_cast<std::size_t>(cfg.outlier_count));
  for (const std::size_t pos : positions) {
    double g = rng.normal();
    if (cfg.outlier_std > 0.0) {
      while (g == 0.0) g = rng.normal();
    }
    bundle.zeta[static_cast<Index>(pos)] = cfg.outlier_std * g;
  }

  bundle.b = bundle.op.apply(bundle.x0) + bundle.w + bundle.zeta;
  return bundle;
}

std::string misfit_slug(const std::string& descriptor) {
  std::string out;
  out.reserve(descriptor.size());
  for (char c : descriptor) {
    out.push_back((c == ':' || c == '=' || c == ',') ? '-' : c);
  }
  return out;
}

namespace {

RunSummary run_one_recovery(const ExperimentConfig& cfg,
                            const std::string& misfit_descriptor,
                            std::uint64_t seed, const fs::path& run_dir) {
  RunSummary run;
  run.seed = seed;
  run.misfit = misfit_descriptor;
  try {
    fs::create_directories(run_dir);
    const Misfit misfit = Misfit::parse(misfit_descriptor);
    const Regularizer reg = Regularizer::parse(cfg.regularizer);
    const InstanceBundle bundle = generate_bpdn_instance(cfg, seed);
    run.sigma = bundle.sigma_for(misfit);

    ProblemSpec problem{bundle.op, bundle.b, misfit, reg};
    ParetoOptions popts = cfg.newton;
    popts.inner = cfg.spg;
    const auto [xhat, trace] = solve_constrained(problem, run.sigma, popts);

    run.tau_star = trace.tau_star;
    run.value = trace.v_star;
    run.status = to_string(trace.status);
    run.newton_iterations =
        trace.steps.empty() ? 0 : trace.steps.back().k;
    run.inner_iterations = trace.total_inner_iterations;

    const double x0_norm = bundle.x0.norm();
    run.relative_error = x0_norm > 0.0 ? (xhat - bundle.x0).norm() / x0_norm
                                       : xhat.norm();

    const double threshold =
        1e-3 * (xhat.size() > 0 ? xhat.lpNorm<Eigen::Infinity>() : 0.0);
    Index predicted = 0, truth = 0, hits = 0;
    for (Index i = 0; i < bundle.x0.size(); ++i) {
      const bool pred = std::abs(xhat[i]) > threshold;
      const bool real = bundle.x0[i] != 0.0;
      predicted += pred;
      truth += real;
      hits += (pred && real);
    }
    run.support_precision =
        predicted > 0 ? static_cast<double>(hits) / static_cast<double>(predicted)
                      : (truth == 0 ? 1.0 : 0.0);
    run.support_recall =
        truth > 0 ? static_cast<double>(hits) / static_cast<double>(truth) : 1.0;

    run.ok = trace.status == ParetoStatus::converged;
    if (!run.ok) run.error = "root finding ended with status " + run.status;

    // Per-run artifacts.
    const Vector residual = bundle.b - bundle.op.apply(xhat);
    write_signals_csv(run_dir / "signals.csv", bundle.x0, xhat, residual);
    {
      std::ostringstream trace_csv;
      write_pareto_csv(trace_csv, trace);
      write_text_file(run_dir / "trace.csv", trace_csv.str());
    }
    write_text_file(run_dir / "summary.json", run_to_json(run).dump(2) + "\n");
  } catch (const std::exception& err) {
    run.ok = false;
    run.error = err.what();
  }
  return run;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.instance != "bpdn") {
    throw std::invalid_argument(
        "run_experiment: recovery experiments need instance = bpdn");
  }
  const fs::path root(cfg.output_dir);
  fs::create_directories(root);

  struct Task {
    std::size_t misfit_index;
    std::uint64_t seed;
    fs::path run_dir;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < cfg.misfits.size(); ++mi) {
    const fs::path misfit_dir = root / misfit_slug(cfg.misfits[mi]);
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
      tasks.push_back(
          {mi, seed, misfit_dir / ("seed-" + std::to_string(seed))});
    }
  }

  // Independent runs; a bounded pool keeps memory and oversubscription in
  // check.  With one hardware thread this degrades to the serial loop.
  std::vector<RunSummary> results(tasks.size());
  const std::size_t hardware = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hardware, tasks.size());
  std::atomic<std::size_t> cursor{0};
  auto drain = [&]() {
    for (std::size_t i; (i = cursor.fetch_add(1)) < tasks.size();) {
      results[i] = run_one_recovery(cfg, cfg.misfits[tasks[i].misfit_index],
                                    tasks[i].seed, tasks[i].run_dir);
    }
  };
  if (workers <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(drain);
    for (auto& thread : pool) thread.join();
  }

  ExperimentResult result;
  result.aggregates.resize(cfg.misfits.size());
  for (std::size_t mi = 0; mi < cfg.misfits.size(); ++mi) {
    result.aggregates[mi].misfit = cfg.misfits[mi];
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& agg = result.aggregates[tasks[i].misfit_index];
    agg.runs.push_back(results[i]);
    if (!results[i].ok) {
      ++agg.failures;
      result.all_ok = false;
    }
  }
  for (auto& agg : result.aggregates) {
    std::vector<double> errors;
    double sum = 0.0;
    for (const auto& run : agg.runs) {
      if (run.ok) {
        errors.push_back(run.relative_error);
        sum += run.relative_error;
      }
    }
    agg.median_relative_error = median(errors);
    agg.mean_relative_error =
        errors.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : sum / static_cast<double>(errors.size());
  }

  nlohmann::json doc;
  doc["replicates"] = cfg.replicates;
  doc["regularizer"] = cfg.regularizer;
  doc["seed"] = cfg.seed;
  doc["misfits"] = nlohmann::json::array();
  for (const auto& agg : result.aggregates) {
    nlohmann::json entry;
    entry["misfit"] = agg.misfit;
    entry["median_relative_error"] = agg.median_relative_error;
    entry["mean_relative_error"] = agg.mean_relative_error;
    entry["failures"] = agg.failures;
    entry["runs"] = nlohmann::json::array();
    for (const auto& run : agg.runs) entry["runs"].push_back(run_to_json(run));
    doc["misfits"].push_back(std::move(entry));
  }
  write_text_file(root / "summary.json", doc.dump(2) + "\n");
  return result;
}

VerifySummary verify_all(const ExperimentConfig& cfg) {
  cfg.validate();
  VerifySummary summary = run_comparison_suite();

  auto append = [&summary](OracleReport report) {
    if (!report.passed) {
      ++summary.failures;
      summary.all_passed = false;
    }
    summary.reports.push_back(std::move(report));
  };

  auto inverse_report = [](const std::string& name, const InverseReport& rep,
                           double tau, double tol) {
    OracleReport out;
    out.quantity = name;
    out.oracle_value = tau;
    out.tolerance = tol;
    if (rep.applicable) {
      out.library_value = rep.tau_roundtrip;
      out.abs_discrepancy = rep.discrepancy;
      out.rel_discrepancy = rep.discrepancy / (1.0 + std::abs(tau));
      out.passed = rep.discrepancy <= tol;
    } else {
      // Constraint inactive (or multiplier vanished): reported, not decided.
      out.quantity += " (not-applicable)";
      out.library_value = tau;
      out.passed = true;
    }
    return out;
  };

  {
    const ProblemSpec fig = figure1_instance();
    append(inverse_report("inverse/figure1@tau=1.5",
                          verify_inverse(fig, 1.5, 1e-7), 1.5, 1e-6));
  }

  // The configured instance.
  if (cfg.instance == "bpdn") {
    const InstanceBundle bundle = generate_bpdn_instance(cfg);
    const Misfit misfit = Misfit::parse(cfg.misfits.front());
    const Regularizer reg = Regularizer::parse(cfg.regularizer);
    const ProblemSpec problem{bundle.op, bundle.b, misfit, reg};
    const double tau = cfg.tau.value_or(0.6 * bundle.x0.lpNorm<1>());
    append(inverse_report("inverse/configured-bpdn",
                          verify_inverse(problem, tau, 1e-5), tau, 1e-5));
  } else if (cfg.instance == "csv") {
    const Matrix A = load_matrix_csv(cfg.a_csv);
    const Vector b = load_vector_csv(cfg.b_csv);
    const ProblemSpec problem{LinearOperator(A), b,
                              Misfit::parse(cfg.misfits.front()),
                              Regularizer::parse(cfg.regularizer)};
    const double tau = cfg.tau.value_or(1.0);
    append(inverse_report("inverse/configured-csv",
                          verify_inverse(problem, tau, 1e-5), tau, 1e-5));
  }
  // figure1 instances are already covered by the fixture above.

  return summary;
}

}  // namespace levelset
