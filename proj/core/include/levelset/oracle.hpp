#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "levelset/problem.hpp"

namespace levelset {

// Brute-force references, deliberately written against the raw definitions
// rather than the closed forms they are used to check.  They ship in the
// library (not only in tests) so the CLI can emit verification reports; the
// underlying formulas have suspected typos in their published sources, so
// runtime verifiability is a feature.

struct GridSpec {
  int points_per_dim = 41;
  int refinements = 2;
};

// min rho(b - Ax) over a feasible grid of lev(phi,tau), refined around the
// incumbent.  Accuracy is O(step^2) at interior minimizers and O(step) when
// the minimizer sits on the level-set boundary.  Requires n <= 3.
double brute_force_value(const ProblemSpec& problem, double tau,
                         const GridSpec& grid = {});

// Exact projection onto polyhedral level sets (one-norm kinds) by
// enumerating sign patterns and solving each face's equality-constrained
// least squares.  Requires n <= 6.
Vector projection_qp_oracle(const Regularizer& reg, const Vector& x,
                            double tau);

// Central difference (v(tau+h) - v(tau-h)) / 2h at tight solver tolerance.
// Requires tau - h >= 0.
double fd_derivative(const ProblemSpec& problem, double tau, double h);

// argmin over {0} and a golden-section-refined log grid of
// tau*mu + (phi*)^pi(s,mu), with the perspective evaluated from per-kind
// conjugate formulas and set membership decided by enumeration.
double mu_grid_oracle(const Regularizer& reg, const Vector& s, double tau);

struct OracleReport {
  std::string quantity;
  double oracle_value = 0.0;
  double library_value = 0.0;
  double abs_discrepancy = 0.0;
  double rel_discrepancy = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  int mu_cases = 60;
  int projection_cases = 120;
  int value_cases = 12;
  int derivative_cases = 10;
  int inverse_cases = 2;  // random instances on top of the fixed fixture
  double mu_tol = 1e-4;          // relative
  double projection_tol = 1e-8;  // absolute, sup norm
  double value_tol = 5e-3;       // relative (grid oracle accuracy)
  double derivative_tol = 1e-3;  // relative
  double inverse_tol = 1e-5;     // absolute on tau
  // Test fixture: corrupt the library-side multiplier branch selection to
  // prove the oracle flags a wrong closed form (negative control).
  bool inject_mu_bug = false;
};

struct VerifySummary {
  std::vector<OracleReport> reports;
  int failures = 0;
  bool all_passed = true;
};

VerifySummary run_comparison_suite(const VerifyOptions& options = {});

// JSON document with the report list and overall verdict.
std::string reports_to_json(const VerifySummary& summary);

}  // namespace levelset
