#include "levelset/spg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

namespace levelset {

namespace {

// The two-norm misfit loses differentiability at r = 0; treat residuals at
// roundoff scale as zero.
bool residual_vanishes(const Misfit& misfit, const Vector& r, const Vector& b) {
  if (misfit.kind() != MisfitKind::two_norm) return false;
  return r.norm() <= 1e-14 * (1.0 + b.norm());
}

}  // namespace

SpgResult solve_subproblem(const ProblemSpec& problem, double tau,
                           const SpgOptions& opts,
                           const std::optional<Vector>& warm_start) {
  problem.validate();
  if (tau < 0.0) {
    throw std::invalid_argument("solve_subproblem: tau must be >= 0");
  }
  if (!problem.reg.supports_projection()) {
    throw std::domain_error(
        "solve_subproblem: regularizer does not support projection");
  }
  if (!(opts.tolerance > 0.0) || opts.memory < 1 ||
      !(0.0 < opts.alpha_min && opts.alpha_min < opts.alpha_max)) {
    throw std::invalid_argument("solve_subproblem: bad options");
  }

  const Index n = problem.op.cols();
  const auto& A = problem.op;
  const auto& rho = problem.misfit;

  if (warm_start && warm_start->size() != n) {
    throw std::invalid_argument("solve_subproblem: warm start has wrong size");
  }
  SpgResult out;
  Vector x = warm_start ? problem.reg.project_level_set(*warm_start, tau)
                        : Vector::Zero(n);
  if (tau == 0.0) x.setZero();

  Vector r = problem.b - A.apply(x);
  double f = rho.value(r);

  auto finish = [&](SpgStatus status, int iters, double pg) {
    out.x = x;
    out.r = r;
    out.value = f;
    out.iterations = iters;
    out.status = status;
    out.pg_norm = pg;
    return out;
  };

  if (residual_vanishes(rho, r, problem.b)) {
    f = 0.0;
    return finish(SpgStatus::nonsmooth_stop, 0, 0.0);
  }

  Vector g = -A.apply_adjoint(rho.gradient(r));
  std::deque<double> window{f};

  const double g_inf = g.lpNorm<Eigen::Infinity>();
  double alpha = g_inf > 0.0
                     ? std::clamp(1.0 / g_inf, opts.alpha_min, opts.alpha_max)
                     : 1.0;
  double last_step = 0.0;

  // The stationarity gap sigma(s|lev(phi,tau)) - <s,x> at s = -g costs only
  // a support evaluation since g is already at hand.  It bounds f(x) - v for
  // convex misfits, so it is the stop that makes inexact evaluations
  // trustworthy on the value scale.
  auto gap_small = [&]() {
    if (!(opts.gap_tolerance > 0.0) || tau <= 0.0) return false;
    const double gap = problem.reg.support_level_set(-g, tau) + g.dot(x);
    return gap <= opts.gap_tolerance;
  };

  for (int k = 0; k < opts.max_iterations; ++k) {
    const double pg = (problem.reg.project_level_set(x - g, tau) - x).norm();
    if (opts.keep_history) out.history.push_back({k, f, pg, last_step});
    if (pg <= opts.tolerance) return finish(SpgStatus::converged, k, pg);
    if (gap_small()) return finish(SpgStatus::converged, k, pg);

    Vector d = problem.reg.project_level_set(x - alpha * g, tau) - x;
    double gtd = g.dot(d);
    if (gtd >= 0.0) {
      // Degenerate spectral step; fall back to the unit step, which always
      // gives a descent direction at a non-stationary feasible point.
      d = problem.reg.project_level_set(x - g, tau) - x;
      gtd = g.dot(d);
      if (gtd >= 0.0) {
        // No descent direction left: the iterate is numerically stationary,
        // so grade it like a line-search failure rather than a hard stop.
        return finish(pg <= 10.0 * opts.tolerance ? SpgStatus::converged
                                                  : SpgStatus::max_iter,
                      k, pg);
      }
    }

    const double f_ref = *std::max_element(window.begin(), window.end());
    const Vector Ad = A.apply(d);

    double step = 1.0;
    bool accepted = false;
    Vector r_trial, x_trial;
    double f_trial = f;
    for (int ls = 0; ls < 60; ++ls) {
      r_trial = r - step * Ad;
      f_trial = rho.value(r_trial);
      if (f_trial <= f_ref + opts.sufficient_decrease * step * gtd) {
        accepted = true;
        break;
      }
      // Safeguarded quadratic interpolation on the 1-d model.
      const double denom = f_trial - f - step * gtd;
      double next = denom > 0.0 ? -0.5 * gtd * step * step / denom : 0.5 * step;
      step = std::clamp(next, 0.1 * step, 0.5 * step);
    }
    if (!accepted) {
      return finish(pg <= 10.0 * opts.tolerance ? SpgStatus::converged
                                                : SpgStatus::max_iter,
                    k, pg);
    }

    x_trial = x + step * d;
    // Exact residual refresh keeps the r = b - Ax invariant to machine
    // precision instead of letting the update drift.
    r = problem.b - A.apply(x_trial);
    f = rho.value(r);
    last_step = step;

    if (residual_vanishes(rho, r, problem.b)) {
      x = x_trial;
      f = 0.0;
      return finish(SpgStatus::nonsmooth_stop, k + 1, 0.0);
    }

    const Vector g_new = -A.apply_adjoint(rho.gradient(r));
    const Vector s_vec = x_trial - x;
    const Vector y_vec = g_new - g;
    const double sty = s_vec.dot(y_vec);
    alpha = sty > 0.0
                ? std::clamp(s_vec.squaredNorm() / sty, opts.alpha_min,
                             opts.alpha_max)
                : opts.alpha_max;

    x = x_trial;
    g = g_new;
    window.push_back(f);
    if (static_cast<int>(window.size()) > opts.memory) window.pop_front();
  }

  const double pg = (problem.reg.project_level_set(x - g, tau) - x).norm();
  if (opts.keep_history) {
    out.history.push_back({opts.max_iterations, f, pg, last_step});
  }
  return finish(pg <= opts.tolerance || gap_small() ? SpgStatus::converged
                                                    : SpgStatus::max_iter,
                opts.max_iterations, pg);
}

KktReport kkt_certificate(const ProblemSpec& problem, const SpgResult& result,
                          double tau) {
  problem.validate();
  if (!problem.misfit.differentiable_at(result.r)) {
    throw nonsmooth_error(
        "kkt_certificate: misfit not differentiable at the residual");
  }

  KktReport report;
  report.u = problem.misfit.gradient(result.r);
  report.s = problem.op.apply_adjoint(report.u);

  const double phi = problem.reg.value(result.x);
  report.feasibility = phi - tau;

  if (tau > 0.0) {
    const MuRecovery rec = recover_mu(problem.reg, report.s, tau);
    report.mu = rec.mu;
    report.branch = rec.branch;
    report.stationarity =
        problem.reg.support_level_set(report.s, tau) - report.s.dot(result.x);
  } else {
    // One-sided multiplier at the domain boundary; lev(phi,0) = {0} for all
    // solvable kinds, so the support term vanishes.
    report.mu = problem.reg.limiting_multiplier(report.s);
    report.branch = report.mu > 0.0 ? MuBranch::active : MuBranch::cone;
    report.stationarity = -report.s.dot(result.x);
  }
  report.complementarity = report.mu * report.feasibility;

  if (problem.misfit.has_conjugate()) {
    report.duality_gap =
        result.value - reduced_dual_value(problem, report.u, tau);
  }
  return report;
}

void write_spg_trace_csv(std::ostream& out,
                         const std::vector<SpgIterate>& history) {
  out << "iter,f,pg-norm,step\n";
  for (const auto& it : history) {
    out << it.iter << ',' << it.f << ',' << it.pg_norm << ',' << it.step
        << '\n';
  }
}

}  // namespace levelset
