#include <cmath>
#include <sstream>

#include "doctest.h"
#include "levelset/operators.hpp"
#include "levelset/rng.hpp"
#include "levelset/spg.hpp"
#include "test_util.hpp"

using namespace levelset;
using testutil::vec;

namespace {
ProblemSpec figure1() {
  Matrix a(2, 2);
  a << 1.0, 0.0, 0.0, 1.0;
  return ProblemSpec{LinearOperator(a), vec({2.0, 1.0}),
                     Misfit::least_squares(), Regularizer::one_norm()};
}

ProblemSpec random_problem(Rng& rng, Index m, Index n, const Misfit& misfit,
                           const Regularizer& reg) {
  Matrix a = gaussian_matrix(m, n, 1.0, rng.next_u64());
  Vector b(m);
  for (Index i = 0; i < m; ++i) b[i] = rng.normal();
  return ProblemSpec{LinearOperator(a), b, misfit, reg};
}
}  // namespace

TEST_SUITE_BEGIN("spg");

TEST_CASE("identity instance solves to the known Pareto values") {
  const ProblemSpec problem = figure1();

  const SpgResult at1 = solve_subproblem(problem, 1.0);
  CHECK(at1.status == SpgStatus::converged);
  CHECK(at1.value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(at1.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(at1.x[1] == doctest::Approx(0.0).epsilon(1e-6));

  const SpgResult at0 = solve_subproblem(problem, 0.0);
  CHECK(at0.status == SpgStatus::converged);
  CHECK(at0.value == doctest::Approx(2.5));
  CHECK(at0.x.norm() == doctest::Approx(0.0));

  const SpgResult at3 = solve_subproblem(problem, 3.0);
  CHECK(at3.value >= 0.0);
  CHECK(at3.value <= 1e-8);
}

TEST_CASE("residual identity and feasibility hold at the solution") {
  Rng rng(101);
  for (const auto& reg :
       {Regularizer::one_norm(), Regularizer::nonneg_one_norm(),
        Regularizer::two_norm(), Regularizer::qs(0.7)}) {
    for (const auto& misfit : {Misfit::least_squares(), Misfit::huber(0.5)}) {
      const ProblemSpec problem = random_problem(rng, 8, 12, misfit, reg);
      // Unit-scale instances certify decrease down to about sqrt(eps), so
      // ask for a tolerance the line search can actually distinguish.
      SpgOptions opts;
      opts.tolerance = 1e-7;
      for (double tau : {0.3, 1.7}) {
        const SpgResult res = solve_subproblem(problem, tau, opts);
        CHECK(problem.reg.value(res.x) <= tau + 1e-10);
        const Vector recomputed = problem.b - problem.op.apply(res.x);
        CHECK((res.r - recomputed).lpNorm<Eigen::Infinity>() <= 1e-14);
        CHECK(res.status == SpgStatus::converged);
      }
    }
  }
}

TEST_CASE("KKT certificate at the identity-instance solution") {
  const ProblemSpec problem = figure1();
  const SpgResult res = solve_subproblem(problem, 1.0);
  const KktReport kkt = kkt_certificate(problem, res, 1.0);

  CHECK(kkt.u[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(kkt.u[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(kkt.mu == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(kkt.branch == MuBranch::active);
  CHECK(std::abs(kkt.feasibility) <= 1e-8);
  CHECK(std::abs(kkt.complementarity) <= 1e-8);
  CHECK(std::abs(kkt.stationarity) <= 1e-8);
  REQUIRE(kkt.duality_gap.has_value());
  CHECK(std::abs(*kkt.duality_gap) <= 1e-8);

  // Interior optimum: everything inactive.
  const SpgResult wide = solve_subproblem(problem, 3.0);
  const KktReport interior = kkt_certificate(problem, wide, 3.0);
  CHECK(interior.u.norm() <= 1e-6);
  CHECK(interior.mu <= 1e-6);
  CHECK(interior.complementarity == doctest::Approx(0.0));

  // A perturbed point is flagged by the stationarity residual.
  SpgResult bad = res;
  bad.x = vec({0.0, 1.0});
  bad.r = problem.b - problem.op.apply(bad.x);
  const KktReport flagged = kkt_certificate(problem, bad, 1.0);
  CHECK(flagged.stationarity > 0.1);
}

TEST_CASE("duality gap is small for converged convex solves") {
  Rng rng(202);
  for (const auto& misfit :
       {Misfit::least_squares(), Misfit::huber(0.4), Misfit::vapnik(0.2)}) {
    for (const auto& reg :
         {Regularizer::one_norm(), Regularizer::nonneg_one_norm()}) {
      const ProblemSpec problem = random_problem(rng, 6, 10, misfit, reg);
      SpgOptions opts;
      opts.tolerance = 1e-10;
      const SpgResult res = solve_subproblem(problem, 0.8, opts);
      if (res.status != SpgStatus::converged) continue;
      if (!problem.misfit.differentiable_at(res.r)) continue;
      const KktReport kkt = kkt_certificate(problem, res, 0.8);
      REQUIRE(kkt.duality_gap.has_value());
      CHECK(*kkt.duality_gap >= -1e-9);
      CHECK(*kkt.duality_gap <= 1e-6 * (1.0 + std::abs(res.value)));
    }
  }
}

TEST_CASE("warm starts preserve the solution") {
  Rng rng(303);
  const ProblemSpec problem = random_problem(rng, 10, 20, Misfit::least_squares(),
                                             Regularizer::one_norm());
  SpgOptions opts;
  opts.tolerance = 1e-7;
  const SpgResult cold = solve_subproblem(problem, 1.2, opts);
  REQUIRE(cold.status == SpgStatus::converged);
  const SpgResult warm = solve_subproblem(problem, 1.2, opts, cold.x);
  CHECK(warm.status == SpgStatus::converged);
  CHECK(warm.iterations <= 1);
  CHECK(warm.value == doctest::Approx(cold.value).epsilon(1e-9));

  // A warm start for a different level is projected to feasibility first.
  const SpgResult shrunk = solve_subproblem(problem, 0.4, opts, cold.x);
  CHECK(problem.reg.value(shrunk.x) <= 0.4 + 1e-10);
}

TEST_CASE("iterate history records nonmonotone descent") {
  Rng rng(404);
  const ProblemSpec problem = random_problem(rng, 8, 16, Misfit::least_squares(),
                                             Regularizer::one_norm());
  SpgOptions opts;
  opts.keep_history = true;
  opts.memory = 10;
  const SpgResult res = solve_subproblem(problem, 1.0, opts);
  REQUIRE(res.history.size() >= 2);

  for (std::size_t k = 1; k < res.history.size(); ++k) {
    double reference = res.history[k - 1].f;
    for (std::size_t j = k >= 10 ? k - 10 : 0; j < k; ++j) {
      reference = std::max(reference, res.history[j].f);
    }
    CHECK(res.history[k].f <= reference + 1e-12 * (1.0 + std::abs(reference)));
  }

  std::ostringstream os;
  write_spg_trace_csv(os, res.history);
  const std::string csv = os.str();
  CHECK(csv.rfind("iter,f,pg-norm,step", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') ==
        static_cast<long>(res.history.size()) + 1);
}

TEST_CASE("two-norm misfit stops nonsmoothly when the residual hits zero") {
  // tau large enough that the unconstrained optimum r = 0 is reachable: the
  // objective |r| is nonsmooth exactly there.
  const ProblemSpec problem{LinearOperator(Matrix::Identity(2, 2)),
                            vec({0.5, -0.25}), Misfit::two_norm(),
                            Regularizer::one_norm()};
  const SpgResult res = solve_subproblem(problem, 2.0);
  CHECK(res.status == SpgStatus::nonsmooth_stop);
  CHECK(res.value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(kkt_certificate(problem, res, 2.0), nonsmooth_error);
}

TEST_CASE("stationarity-gap stopping rule certifies coarse solves") {
  Rng rng(505);
  const ProblemSpec problem = random_problem(rng, 10, 30, Misfit::least_squares(),
                                             Regularizer::one_norm());
  SpgOptions coarse;
  coarse.tolerance = 1e-16;  // unreachable: only the gap rule can stop early
  coarse.gap_tolerance = 1e-3;
  coarse.max_iterations = 5000;
  const SpgResult res = solve_subproblem(problem, 2.0, coarse);
  CHECK(res.status == SpgStatus::converged);

  // The gap rule guarantees value accuracy: compare with a tight solve.
  SpgOptions tight;
  tight.tolerance = 1e-12;
  const SpgResult exact = solve_subproblem(problem, 2.0, tight);
  CHECK(res.value >= exact.value - 1e-12);
  CHECK(res.value - exact.value <= 1e-3);
}

TEST_CASE("option validation and unsupported kinds") {
  const ProblemSpec problem = figure1();
  SpgOptions bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(solve_subproblem(problem, 1.0, bad), std::invalid_argument);
  bad = SpgOptions{};
  bad.memory = 0;
  CHECK_THROWS_AS(solve_subproblem(problem, 1.0, bad), std::invalid_argument);
  bad = SpgOptions{};
  bad.alpha_min = 1.0;
  bad.alpha_max = 0.5;
  CHECK_THROWS_AS(solve_subproblem(problem, 1.0, bad), std::invalid_argument);

  ProblemSpec vap = figure1();
  vap.reg = Regularizer::vapnik(0.1);
  CHECK_THROWS_AS(solve_subproblem(vap, 1.0), std::domain_error);

  CHECK_THROWS_AS(solve_subproblem(problem, -1.0), std::invalid_argument);
}

TEST_SUITE_END();
