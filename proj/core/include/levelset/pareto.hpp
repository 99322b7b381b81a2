#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "levelset/value_fn.hpp"

namespace levelset {

struct ParetoOptions {
  double rtol = 1e-9;      // |v(tau*) - sigma| <= rtol * max(1, sigma)
  int max_iterations = 60;  // outer Newton/bisection steps
  double theta = 0.1;       // inner tolerance factor against |v - sigma|
  double tol_min = 1e-12;   // floor for the inner solve tolerance
  double tau0 = 0.0;        // starting level (v(0) = rho(b) needs no solve)
  double mu_floor = 1e-12;  // |v'| below this counts as a flat segment
  SpgOptions inner;         // base options for the subproblem solves
};

enum class ParetoStatus { converged, bracket_exhausted, max_iter };

inline const char* to_string(ParetoStatus s) {
  switch (s) {
    case ParetoStatus::converged:
      return "converged";
    case ParetoStatus::bracket_exhausted:
      return "bracket-exhausted";
    case ParetoStatus::max_iter:
      return "max-iter";
  }
  return "unknown";
}

struct ParetoStep {
  int k = 0;
  double tau = 0.0;
  double v = 0.0;
  double vprime = 0.0;  // -mu at the step's solution (NaN when unavailable)
  double tol = 0.0;     // inner tolerance used
  int inner_iterations = 0;
};

struct ParetoTrace {
  std::vector<ParetoStep> steps;  // step 0 is the starting evaluation
  double tau_star = 0.0;
  double v_star = 0.0;
  ParetoStatus status = ParetoStatus::max_iter;
  long total_inner_iterations = 0;
};

// Solve P_R(b,sigma): find tau with v(b,tau) = sigma by safeguarded inexact
// Newton (bracketed, bisection fallback on flat segments), then return the
// subproblem solution at tau*.  sigma >= v(b,tau0) returns tau* = tau0
// immediately (constraint already satisfied).  Throws std::runtime_error
// when sigma is unreachable (below the infimum of v).
std::pair<Vector, ParetoTrace> solve_constrained(const ProblemSpec& problem,
                                                 double sigma,
                                                 const ParetoOptions& opts = {});

// One Newton update tau + (sigma - v)/v'.  Requires v' < 0.
double newton_step(double tau, double v, double vprime, double sigma);

// Round-trip check of the inverse-function relationship: sigma = v1(tau),
// then tau_roundtrip = v2(sigma) by root-finding, reporting the
// discrepancy |tau_roundtrip - tau| and the solution distance.  Instances
// whose constraint is inactive at tau (or whose multiplier vanishes) are
// reported not applicable rather than decided.
struct InverseReport {
  bool applicable = false;
  double tau = 0.0;
  double sigma = 0.0;
  double tau_roundtrip = 0.0;
  double discrepancy = 0.0;
  double solution_distance = 0.0;
  // Evidence for the activity decision.
  double phi_gap = 0.0;  // phi(xbar) - tau at the forward solve
  double mu = 0.0;
  ParetoStatus root_status = ParetoStatus::max_iter;
};

InverseReport verify_inverse(const ProblemSpec& problem, double tau,
                             double tol);

// Columns: k, tau, v, vprime, tol, inner-iters.
void write_pareto_csv(std::ostream& out, const ParetoTrace& trace);

}  // namespace levelset
