#include "levelset/value_fn.hpp"

#include <iomanip>
#include <limits>
#include <ostream>

namespace levelset {

ValueSample evaluate(const ProblemSpec& problem, double tau, double tol,
                     const SpgOptions& base,
                     const std::optional<Vector>& warm_start) {
  SpgOptions opts = base;
  opts.tolerance = tol;
  const SpgResult result = solve_subproblem(problem, tau, opts, warm_start);

  ValueSample sample;
  sample.tau = tau;
  sample.v = result.value;
  sample.x = result.x;
  sample.r = result.r;
  sample.solver_status = result.status;
  sample.iterations = result.iterations;
  sample.pg_norm = result.pg_norm;

  if (result.status == SpgStatus::nonsmooth_stop) {
    // Two-norm misfit at r = 0: v = 0, but no gradient data exists there.
    sample.u = Vector::Zero(problem.op.rows());
    sample.feasibility = problem.reg.value(result.x) - tau;
    sample.differentiable = false;
    return sample;
  }

  const KktReport kkt = kkt_certificate(problem, result, tau);
  sample.u = kkt.u;
  sample.mu = kkt.mu;
  sample.branch = kkt.branch;
  sample.duality_gap = kkt.duality_gap;
  sample.feasibility = kkt.feasibility;
  sample.stationarity = kkt.stationarity;
  // Unique dual vector (differentiable misfit) plus a singleton multiplier
  // argmin; the latter holds across the catalog whenever tau > 0.
  sample.differentiable =
      tau > 0.0 && problem.misfit.differentiable_at(result.r);
  return sample;
}

double tau_derivative(const ValueSample& sample) {
  if (!sample.differentiable) {
    throw nonsmooth_error("tau_derivative: sample is not differentiable");
  }
  return -sample.mu;
}

Vector b_subgradient(const ValueSample& sample) {
  if (sample.u.size() == 0 ||
      sample.solver_status == SpgStatus::nonsmooth_stop) {
    throw nonsmooth_error("b_subgradient: residual was nonsmooth");
  }
  return sample.u;
}

std::vector<ValueSample> sweep(const ProblemSpec& problem,
                               const std::vector<double>& taus, double tol,
                               const SpgOptions& base) {
  std::vector<ValueSample> rows;
  rows.reserve(taus.size());
  std::optional<Vector> warm;
  for (double tau : taus) {
    rows.push_back(evaluate(problem, tau, tol, base, warm));
    warm = rows.back().x;
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<ValueSample>& rows) {
  out << "tau,v,dvdtau,gap,iters\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : rows) {
    out << s.tau << ',' << s.v << ',' << -s.mu << ',';
    if (s.duality_gap) out << *s.duality_gap;
    out << ',' << s.iterations << '\n';
  }
}

}  // namespace levelset
