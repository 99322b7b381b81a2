#include "levelset/calculus.hpp"

#include <cmath>
#include <limits>

namespace levelset {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// sigma(z | lev(phi,0)).  The projectable kinds vanish only at the origin;
// the Vapnik kind's zero level set is the epsilon-box.
double support_zero_level(const Regularizer& reg, const Vector& z) {
  if (reg.kind() == RegularizerKind::affine_qs) {
    return reg.epsilon() * z.lpNorm<1>();
  }
  return 0.0;
}
}  // namespace

double reduced_dual_value(const ProblemSpec& problem, const Vector& u,
                          double tau) {
  if (!problem.misfit.convex()) {
    throw std::domain_error(
        "reduced_dual_value: misfit has no conjugate (nonconvex)");
  }
  if (tau < 0.0) {
    throw std::invalid_argument("reduced_dual_value: tau must be >= 0");
  }
  problem.validate();
  const double conj = problem.misfit.conjugate(u);
  if (conj == kInf) return -kInf;
  const Vector s = problem.op.apply_adjoint(u);
  const double support = tau == 0.0 ? support_zero_level(problem.reg, s)
                                    : problem.reg.support_level_set(s, tau);
  return problem.b.dot(u) - conj - support;
}

MuRecovery recover_mu(const Regularizer& reg, const Vector& s, double tau) {
  const double mu = reg.multiplier_from_dual(s, tau);
  return MuRecovery{mu, mu > 0.0 ? MuBranch::active : MuBranch::cone};
}

CoercivityReport coercivity_check(const ProblemSpec& problem, double tau) {
  problem.validate();
  (void)tau;  // enters only through lev(phi,tau), which is bounded for the
              // whole catalog, so the flags do not depend on it

  // Horizon cone of the misfit: {0} for every kind that grows at least
  // linearly; the student-t penalty grows logarithmically, so its horizon
  // cone is all of R^m.
  const bool rho_horizon_trivial =
      problem.misfit.kind() != MisfitKind::student_t;

  // Horizon cone of the regularizer: every catalog kind is coercive on its
  // domain (gauges of bounded sets, Huber sums, Vapnik sums), so hzn phi =
  // {0} throughout.
  const bool phi_horizon_trivial = true;

  // Primal: hzn phi intersect (-A^{-1} hzn rho) = {0}.  With hzn phi = {0}
  // this holds regardless of A; the rho table is kept for honesty should
  // the catalog ever grow a non-coercive regularizer.
  const bool primal = phi_horizon_trivial || rho_horizon_trivial;

  // Dual: b in int(dom rho + A lev(phi,tau)); every catalog misfit is
  // finite-valued, so dom rho = R^m and the condition is automatic.
  const bool dual = true;

  return CoercivityReport{primal, dual};
}

}  // namespace levelset
