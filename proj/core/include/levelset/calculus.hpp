#pragma once

#include <string>

#include "levelset/problem.hpp"

namespace levelset {

// Dual variable of the reduced dual together with the recovered level-set
// multiplier.
struct DualPoint {
  Vector u;
  double mu = 0.0;
  double value = 0.0;  // reduced dual objective at u
};

// Which branch of the multiplier recovery applied: mu = 0 means s lies in
// the appropriate normal cone (extended multiplier), mu > 0 is the scaled
// subgradient case.
enum class MuBranch { cone, active };

inline const char* to_string(MuBranch b) {
  return b == MuBranch::cone ? "cone-branch" : "active-branch";
}

struct MuRecovery {
  double mu = 0.0;
  MuBranch branch = MuBranch::cone;
};

// Reduced dual objective <b,u> - rho*(u) - sigma(A^T u | lev(phi,tau)).
// Returns -inf when u is outside dom rho*.  tau = 0 is handled via
// lev(phi,0): {0} for the projectable kinds, the epsilon-box for the
// Vapnik affine-qs kind.  Throws std::domain_error for student-t.
double reduced_dual_value(const ProblemSpec& problem, const Vector& u,
                          double tau);

// Multiplier recovery from s = A^T u at a (near-)optimal dual point.
MuRecovery recover_mu(const Regularizer& reg, const Vector& s, double tau);

struct CoercivityReport {
  bool primal = false;  // level-constrained objective has bounded sublevels
  bool dual = false;    // reduced dual objective is coercive
};

// Horizon-cone conditions for existence of primal/dual solutions, decided
// by per-kind tables (the catalog is small enough to enumerate).
CoercivityReport coercivity_check(const ProblemSpec& problem, double tau);

}  // namespace levelset
