#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "levelset/spg.hpp"

namespace levelset {

// One evaluation of the value function v(b,tau) with its sensitivity data.
struct ValueSample {
  double tau = 0.0;
  double v = 0.0;
  Vector x;  // subproblem solution
  Vector r;  // optimal residual b - Ax
  Vector u;  // dual variable  grad rho(r); empty at a nonsmooth stop
  double mu = 0.0;
  MuBranch branch = MuBranch::cone;
  std::optional<double> duality_gap;  // absent for student-t / nonsmooth stop
  bool differentiable = false;
  // Solver diagnostics.
  SpgStatus solver_status = SpgStatus::max_iter;
  int iterations = 0;
  double pg_norm = 0.0;
  double feasibility = 0.0;
  double stationarity = 0.0;
};

// Solve P(b,tau) to tolerance tol and assemble the sample.  The
// differentiable flag is the operational test: misfit differentiable at the
// residual and a singleton multiplier argmin (true for the whole catalog
// when tau > 0); tau = 0 always reports false (one-sided only).
ValueSample evaluate(const ProblemSpec& problem, double tau, double tol,
                     const SpgOptions& base = {},
                     const std::optional<Vector>& warm_start = {});

// dv/dtau = -mu.  Throws nonsmooth_error unless the sample is marked
// differentiable.
double tau_derivative(const ValueSample& sample);

// Subgradient of v in b, namely u = grad rho(b - A xbar).  Throws
// nonsmooth_error when the residual was nonsmooth.
Vector b_subgradient(const ValueSample& sample);

// Evaluate on a tau grid with warm starts carried forward.
std::vector<ValueSample> sweep(const ProblemSpec& problem,
                               const std::vector<double>& taus, double tol,
                               const SpgOptions& base = {});

// Columns: tau, v, dv/dtau, gap, iters.  The gap cell is empty when no
// conjugate exists.
void write_sweep_csv(std::ostream& out, const std::vector<ValueSample>& rows);

}  // namespace levelset
