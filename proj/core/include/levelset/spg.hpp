#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "levelset/calculus.hpp"
#include "levelset/problem.hpp"

namespace levelset {

struct SpgOptions {
  int max_iterations = 10000;
  double tolerance = 1e-9;  // on the unit-step projected-gradient norm
  int memory = 10;          // nonmonotone reference window
  double alpha_min = 1e-10;
  double alpha_max = 1e10;
  double sufficient_decrease = 1e-4;
  bool keep_history = false;  // record per-iterate log for tracing
  // Optional second stopping rule on the stationarity gap
  // sigma(s|lev) - <s,x> with s = A^T grad rho(r), a value-scale bound on
  // the suboptimality of f(x) for convex misfits.  0 disables it.  Root
  // finding relies on this: it makes inexact evaluations safe to compare
  // against the target level.
  double gap_tolerance = 0.0;
};

enum class SpgStatus { converged, max_iter, nonsmooth_stop };

inline const char* to_string(SpgStatus s) {
  switch (s) {
    case SpgStatus::converged:
      return "converged";
    case SpgStatus::max_iter:
      return "max-iter";
    case SpgStatus::nonsmooth_stop:
      return "nonsmooth-stop";
  }
  return "unknown";
}

struct SpgIterate {
  int iter = 0;
  double f = 0.0;
  double pg_norm = 0.0;
  double step = 0.0;  // accepted line-search step of the previous move
};

struct SpgResult {
  Vector x;
  Vector r;  // b - A x
  double value = 0.0;
  int iterations = 0;
  SpgStatus status = SpgStatus::max_iter;
  double pg_norm = 0.0;
  std::vector<SpgIterate> history;  // populated when keep_history is set
};

// Spectral projected gradient for P(b,tau): Barzilai-Borwein steps with a
// nonmonotone line search; every iterate stays feasible via
// project_level_set.  tau = 0 short-circuits to x = 0.
SpgResult solve_subproblem(const ProblemSpec& problem, double tau,
                           const SpgOptions& opts = {},
                           const std::optional<Vector>& warm_start = {});

struct KktReport {
  Vector u;   // gradient of the misfit at the residual
  Vector s;   // A^T u
  double mu = 0.0;
  MuBranch branch = MuBranch::cone;
  double feasibility = 0.0;      // phi(x) - tau (signed)
  double complementarity = 0.0;  // mu * (phi(x) - tau)
  double stationarity = 0.0;     // sigma(s|lev) - <s,x>
  std::optional<double> duality_gap;  // v - reduced dual; absent without a
                                      // conjugate (student-t)
};

// Optimality residuals at a solver result.  Throws nonsmooth_error when the
// misfit is not differentiable at the residual.  At tau = 0 the multiplier
// reported is the one-sided limit.
KktReport kkt_certificate(const ProblemSpec& problem, const SpgResult& result,
                          double tau);

// Iterate log as CSV: iter, f, pg-norm, step.
void write_spg_trace_csv(std::ostream& out,
                         const std::vector<SpgIterate>& history);

}  // namespace levelset
