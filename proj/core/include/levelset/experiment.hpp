#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "levelset/oracle.hpp"
#include "levelset/pareto.hpp"
#include "levelset/problem.hpp"

namespace levelset {

// Everything the CLI verbs need, serializable as key-value text.  Unknown
// keys are rejected; serialize followed by parse reproduces the config.
struct ExperimentConfig {
  // Instance selection: "bpdn" (generated), "figure1" (fixed 2-d fixture),
  // or "csv" (A and b loaded from a_csv / b_csv).
  std::string instance = "bpdn";
  std::string a_csv;
  std::string b_csv;

  // Generated-instance geometry.
  Index m = 120;
  Index n = 512;
  Index k = 20;
  double variance = 0.1;    // matrix entry variance
  double noise_std = 0.005;
  int outlier_count = 5;
  double outlier_std = 2.0;  // outliers ~ N(0, 4) read as variance 4

  // Model descriptors (parsed by Misfit::parse / Regularizer::parse).
  // Robustness scales sit against the noise model: huber's kappa at twice
  // the dense-noise std (the classical 1.345*std rounded up), student-t's
  // nu so that sqrt(nu) falls between the inlier and outlier scales.
  std::vector<std::string> misfits = {"least-squares", "huber:kappa=0.01",
                                      "student-t:nu=0.01"};
  std::string regularizer = "nonneg-l1";

  // Driver.
  std::uint64_t seed = 1;
  int replicates = 20;
  std::string output_dir = "out";
  std::optional<double> tau;    // solve verb: evaluate v(b,tau)
  std::optional<double> sigma;  // solve verb: root-find v(b,tau)=sigma
  std::string tau_grid;         // pareto-curve verb: comma list of taus

  // Solver options.
  SpgOptions spg;
  ParetoOptions newton;  // newton.inner is ignored; spg above is used

  void validate() const;
  std::string serialize() const;
  void set_key(const std::string& key, const std::string& value);
  static ExperimentConfig parse_text(const std::string& text);
  static ExperimentConfig load_file(const std::string& path);
};

// One generated measurement setup b = A x0 + w + zeta.
struct InstanceBundle {
  LinearOperator op{Matrix{}};
  Vector x0;    // nonnegative, exactly k nonzeros
  Vector w;     // dense small noise
  Vector zeta;  // sparse outliers (exactly outlier_count nonzeros)
  Vector b;

  // sigma_rho: the misfit evaluated at the total error w + zeta, so the
  // true signal is feasible for the residual constraint.
  double sigma_for(const Misfit& misfit) const;
};

// Deterministic generation from cfg.seed; a one-argument seed override
// supports replicate streams.  Draw order (one generator): matrix seed,
// support indices, support magnitudes, noise, outlier positions, outlier
// values.
InstanceBundle generate_bpdn_instance(const ExperimentConfig& cfg);
InstanceBundle generate_bpdn_instance(const ExperimentConfig& cfg,
                                      std::uint64_t seed);

// Outcome of one (seed, misfit) recovery run.
struct RunSummary {
  std::uint64_t seed = 0;
  std::string misfit;
  bool ok = false;
  std::string error;  // empty when ok
  double sigma = 0.0;
  double tau_star = 0.0;
  double value = 0.0;
  double relative_error = 0.0;    // ||xhat - x0|| / ||x0||
  double support_precision = 0.0;  // at threshold 1e-3 * ||xhat||_inf
  double support_recall = 0.0;
  int newton_iterations = 0;
  int inner_iterations = 0;
  std::string status;
};

struct MisfitAggregate {
  std::string misfit;
  double median_relative_error = 0.0;
  double mean_relative_error = 0.0;
  int failures = 0;
  std::vector<RunSummary> runs;  // one per seed, in seed order
};

struct ExperimentResult {
  std::vector<MisfitAggregate> aggregates;  // config order
  bool all_ok = true;
};

// Runs replicates x misfits recoveries (independent runs may execute
// concurrently; artifacts land in per-run directories).  Writes
// <output_dir>/<misfit-slug>/seed-<s>/{summary.json, trace.csv,
// signals.csv} and an aggregate <output_dir>/summary.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Oracle comparison suite plus inverse-function checks on the Figure-1
// fixture and on the configured instance, merged into one report list.
VerifySummary verify_all(const ExperimentConfig& cfg);

// Directory-safe name for a misfit descriptor ("huber:kappa=0.25" ->
// "huber-kappa-0.25").
std::string misfit_slug(const std::string& descriptor);

}  // namespace levelset
