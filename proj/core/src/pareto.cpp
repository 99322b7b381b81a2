#include "levelset/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace levelset {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

double newton_step(double tau, double v, double vprime, double sigma) {
  if (!(vprime < 0.0)) {
    throw std::invalid_argument("newton_step: requires v' < 0");
  }
  return tau + (sigma - v) / vprime;
}

std::pair<Vector, ParetoTrace> solve_constrained(const ProblemSpec& problem,
                                                 double sigma,
                                                 const ParetoOptions& opts) {
  problem.validate();
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("solve_constrained: sigma must be >= 0");
  }
  if (opts.tau0 < 0.0) {
    throw std::invalid_argument("solve_constrained: tau0 must be >= 0");
  }

  ParetoTrace trace;
  double tau = opts.tau0;
  double v = 0.0;
  double mu = kNaN;
  Vector x = Vector::Zero(problem.op.cols());

  if (tau == 0.0) {
    // v(0) = rho(b) without a solve; the slope is the one-sided multiplier.
    v = problem.misfit.value(problem.b);
    if (problem.misfit.differentiable_at(problem.b)) {
      const Vector s =
          problem.op.apply_adjoint(problem.misfit.gradient(problem.b));
      mu = problem.reg.limiting_multiplier(s);
    }
    trace.steps.push_back({0, tau, v, -mu, 0.0, 0});
  } else {
    const double tol0 = std::max(opts.tol_min, 1e-8);
    ValueSample sample = evaluate(problem, tau, tol0, opts.inner);
    v = sample.v;
    mu = sample.solver_status == SpgStatus::nonsmooth_stop ? kNaN : sample.mu;
    x = std::move(sample.x);
    trace.total_inner_iterations += sample.iterations;
    trace.steps.push_back({0, tau, v, -mu, tol0, sample.iterations});
  }

  const double target_tol = opts.rtol * std::max(1.0, sigma);
  auto finish = [&](ParetoStatus status) {
    trace.tau_star = tau;
    trace.v_star = v;
    trace.status = status;
    return std::pair<Vector, ParetoTrace>(std::move(x), std::move(trace));
  };

  // Budget already met at the start: the constraint of P_R is inactive and
  // tau0 is the answer.
  if (v <= sigma || std::abs(v - sigma) <= target_tol) {
    return finish(ParetoStatus::converged);
  }

  double tau_lo = tau;   // v(tau_lo) >= sigma
  double tau_hi = kInf;  // v(tau_hi) <= sigma once known
  const double expansion_limit = 1e14 * std::max(1.0, tau + 1.0);

  for (int k = 1; k <= opts.max_iterations; ++k) {
    if (std::isfinite(tau_hi) &&
        tau_hi - tau_lo <= 1e-13 * std::max(1.0, tau_hi)) {
      return finish(ParetoStatus::bracket_exhausted);
    }

    const double vprime = -mu;
    const bool newton_ok = std::isfinite(vprime) && vprime < -opts.mu_floor;
    double tau_next;
    if (newton_ok) {
      tau_next = newton_step(tau, v, vprime, sigma);
    } else if (std::isfinite(tau_hi)) {
      tau_next = 0.5 * (tau_lo + tau_hi);
    } else {
      // Flat segment with no right bracket yet: expand.
      tau_next = 2.0 * tau + 1.0;
    }
    // Safeguard: keep proposals inside the bracket.
    if (std::isfinite(tau_hi)) {
      if (!(tau_next > tau_lo && tau_next < tau_hi)) {
        tau_next = 0.5 * (tau_lo + tau_hi);
      }
    } else {
      if (tau_next <= tau_lo) tau_next = 2.0 * tau_lo + 1.0;
      if (tau_next > expansion_limit) {
        throw std::runtime_error(
            "solve_constrained: sigma appears unreachable (v never falls to "
            "sigma as tau grows)");
      }
    }

    // Inexactness on the value scale: the inner solve may stop once its
    // stationarity gap falls under theta*|v - sigma|.  The pg tolerance
    // stays tight as the fallback stop.
    double tol_k = std::max(opts.tol_min, opts.theta * std::abs(v - sigma));
    SpgOptions inner = opts.inner;
    inner.gap_tolerance = tol_k;
    ValueSample sample = evaluate(problem, tau_next, inner.tolerance, inner, x);
    int inner_iters = sample.iterations;
    // The primal value only over-estimates, so landing above sigma does not
    // by itself certify the side of the root: that needs the reported gap
    // small against the distance (then v - gap > sigma).  A step that lands
    // much closer to the root than the previous distance suggested is
    // re-evaluated tighter, warm-started, until certified or at the floor.
    // Values below sigma are always certified (v underestimates nothing).
    while (sample.v > sigma &&
           sample.solver_status != SpgStatus::nonsmooth_stop &&
           sample.stationarity > opts.theta * (sample.v - sigma) &&
           tol_k > opts.tol_min) {
      tol_k = std::max(
          opts.tol_min,
          std::min(0.5 * tol_k, opts.theta * (sample.v - sigma)));
      inner.gap_tolerance = tol_k;
      sample = evaluate(problem, tau_next, inner.tolerance, inner, sample.x);
      inner_iters += sample.iterations;
    }
    tau = tau_next;
    v = sample.v;
    mu = sample.solver_status == SpgStatus::nonsmooth_stop ? kNaN : sample.mu;
    x = std::move(sample.x);
    trace.total_inner_iterations += inner_iters;
    trace.steps.push_back({k, tau, v, -mu, tol_k, inner_iters});

    if (std::abs(v - sigma) <= target_tol) {
      return finish(ParetoStatus::converged);
    }
    if (v > sigma) {
      tau_lo = tau;
    } else {
      tau_hi = tau;
    }
  }
  return finish(ParetoStatus::max_iter);
}

InverseReport verify_inverse(const ProblemSpec& problem, double tau,
                             double tol) {
  if (!(tau > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("verify_inverse: tau and tol must be positive");
  }
  InverseReport report;
  report.tau = tau;

  const double tight = std::max(1e-13, std::min(1e-10, 0.01 * tol));
  const ValueSample forward = evaluate(problem, tau, tight);
  report.sigma = forward.v;
  report.phi_gap = forward.feasibility;
  report.mu = forward.mu;

  // The inverse relationship only holds where the constraint is active at
  // the solution and carries a nonvanishing multiplier (otherwise v is
  // flat at tau and the root of v = sigma is not isolated).
  const bool active = std::abs(report.phi_gap) <= 1e-6 * std::max(1.0, tau) &&
                      forward.solver_status != SpgStatus::nonsmooth_stop &&
                      report.mu > 1e-6;
  if (!active) {
    report.applicable = false;
    report.tau_roundtrip = kNaN;
    report.discrepancy = kNaN;
    report.solution_distance = kNaN;
    return report;
  }

  ParetoOptions popts;
  // Target |tau_roundtrip - tau| ~ tol: the root-finder leaves a value
  // residual up to rtol*max(1,sigma), which maps to a tau error of about
  // that over mu.
  popts.rtol = std::clamp(0.05 * tol * report.mu / std::max(1.0, report.sigma),
                          1e-13, 1e-9);
  popts.tol_min = 1e-13;
  auto [x2, root_trace] = solve_constrained(problem, report.sigma, popts);

  report.applicable = true;
  report.tau_roundtrip = root_trace.tau_star;
  report.discrepancy = std::abs(root_trace.tau_star - tau);
  report.solution_distance = (x2 - forward.x).norm();
  report.root_status = root_trace.status;
  return report;
}

void write_pareto_csv(std::ostream& out, const ParetoTrace& trace) {
  out << "k,tau,v,vprime,tol,inner-iters\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : trace.steps) {
    out << s.k << ',' << s.tau << ',' << s.v << ',' << s.vprime << ',' << s.tol
        << ',' << s.inner_iterations << '\n';
  }
}

}  // namespace levelset
