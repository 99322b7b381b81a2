#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "levelset/operators.hpp"
#include "levelset/rng.hpp"
#include "levelset/value_fn.hpp"
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

// Closed form for the identity instance: piecewise quadratic in tau.
double closed_form(double tau) {
  if (tau <= 1.0) return 0.5 + 0.5 * (tau - 2.0) * (tau - 2.0);
  if (tau <= 3.0) return 0.25 * (tau - 3.0) * (tau - 3.0);
  return 0.0;
}

double closed_form_slope(double tau) {
  if (tau <= 1.0) return tau - 2.0;
  if (tau <= 3.0) return 0.5 * (tau - 3.0);
  return 0.0;
}
}  // namespace

TEST_SUITE_BEGIN("value_fn");

TEST_CASE("identity instance matches the closed form on a grid") {
  const ProblemSpec problem = figure1();
  const std::vector<double> taus = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  for (double tau : taus) {
    const ValueSample s = evaluate(problem, tau, 1e-10);
    CHECK(std::abs(s.v - closed_form(tau)) <= 1e-6);
    if (tau > 0.0) {
      CHECK(s.differentiable);
      CHECK(tau_derivative(s) ==
            doctest::Approx(closed_form_slope(tau)).epsilon(1e-6));
    }
  }
}

TEST_CASE("sample carries consistent primal-dual data") {
  const ProblemSpec problem = figure1();
  const ValueSample s = evaluate(problem, 0.5, 1e-10);
  CHECK(s.v == doctest::Approx(1.625).epsilon(1e-8));
  CHECK(s.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(s.x[1] == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(s.r[0] == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(s.r[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s.u[0] == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(s.mu == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(s.branch == MuBranch::active);
  REQUIRE(s.duality_gap.has_value());
  CHECK(std::abs(*s.duality_gap) <= 1e-8);
  CHECK(s.solver_status == SpgStatus::converged);
  CHECK(s.feasibility <= 1e-10);

  // Past the Pareto endpoint the constraint is inactive and the slope flat.
  const ValueSample wide = evaluate(problem, 4.0, 1e-10);
  CHECK(wide.mu <= 1e-7);
  CHECK(wide.differentiable);
  CHECK(tau_derivative(wide) == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("tau = 0 reports the one-sided multiplier only") {
  const ProblemSpec problem = figure1();
  const ValueSample s = evaluate(problem, 0.0, 1e-10);
  CHECK(s.v == doctest::Approx(2.5));
  CHECK_FALSE(s.differentiable);
  CHECK(s.mu == doctest::Approx(2.0));  // limit of -v' as tau -> 0+
  CHECK_THROWS_AS(tau_derivative(s), nonsmooth_error);
  // The b-subgradient is still well defined: the residual is smooth.
  const Vector u = b_subgradient(s);
  CHECK(u[0] == doctest::Approx(2.0));
  CHECK(u[1] == doctest::Approx(1.0));
}

TEST_CASE("b-subgradient satisfies the subgradient inequality") {
  const ProblemSpec problem = figure1();
  const double tau = 1.0;
  const ValueSample s = evaluate(problem, tau, 1e-10);
  const Vector u = b_subgradient(s);
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(u[1] == doctest::Approx(1.0).epsilon(1e-7));

  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    Vector bp(2);
    for (Index i = 0; i < 2; ++i) bp[i] = problem.b[i] + rng.normal();
    ProblemSpec shifted = problem;
    shifted.b = bp;
    const ValueSample sp = evaluate(shifted, tau, 1e-10);
    const double predicted = s.v + u.dot(bp - problem.b);
    CHECK(sp.v >= predicted - 1e-7 * (1.0 + std::abs(sp.v)));
  }
}

TEST_CASE("value function is nonincreasing and convex in tau") {
  Rng rng(99);
  Matrix a = gaussian_matrix(6, 10, 1.0, rng.next_u64());
  Vector b(6);
  for (Index i = 0; i < 6; ++i) b[i] = rng.normal();
  for (const auto& reg : {Regularizer::one_norm(), Regularizer::qs(1.0)}) {
    const ProblemSpec problem{LinearOperator(a), b, Misfit::least_squares(),
                              reg};
    std::vector<double> taus;
    for (int i = 0; i <= 12; ++i) taus.push_back(0.25 * i);
    const std::vector<ValueSample> rows = sweep(problem, taus, 1e-10);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].v <= rows[i - 1].v + 1e-9 * (1.0 + rows[i - 1].v));
    }
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
      const double midpoint = 0.5 * (rows[i - 1].v + rows[i + 1].v);
      CHECK(rows[i].v <= midpoint + 1e-8 * (1.0 + midpoint));
    }
  }
}

TEST_CASE("finite differences confirm the tau derivative") {
  Rng rng(123);
  Matrix a = gaussian_matrix(5, 8, 1.0, rng.next_u64());
  Vector b(5);
  for (Index i = 0; i < 5; ++i) b[i] = rng.normal();
  for (const auto& misfit : {Misfit::least_squares(), Misfit::huber(0.5)}) {
    const ProblemSpec problem{LinearOperator(a), b, misfit,
                              Regularizer::one_norm()};
    for (double tau : {0.4, 0.9, 1.5}) {
      const ValueSample s = evaluate(problem, tau, 1e-11);
      if (!s.differentiable || s.mu < 1e-3) continue;
      const double h = 1e-4 * std::max(1.0, tau);
      const double vp = evaluate(problem, tau + h, 1e-11).v;
      const double vm = evaluate(problem, tau - h, 1e-11).v;
      const double fd = (vp - vm) / (2.0 * h);
      CHECK(tau_derivative(s) == doctest::Approx(fd).epsilon(1e-3));
    }
  }
}

TEST_CASE("sweep CSV layout") {
  const ProblemSpec problem = figure1();
  const std::vector<ValueSample> rows =
      sweep(problem, {0.5, 1.0, 2.0}, 1e-10);
  std::ostringstream os;
  write_sweep_csv(os, rows);
  const std::string csv = os.str();
  CHECK(csv.rfind("tau,v,dvdtau,gap,iters", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  // Without a conjugate the gap column is empty: ",," appears in the row.
  ProblemSpec st = figure1();
  st.misfit = Misfit::student_t(1.0);
  const ValueSample sample = evaluate(st, 1.0, 1e-8);
  CHECK_FALSE(sample.duality_gap.has_value());
  std::ostringstream os2;
  write_sweep_csv(os2, {sample});
  const std::string line = os2.str().substr(os2.str().find('\n') + 1);
  CHECK(line.find(",,") != std::string::npos);
}

TEST_CASE("nonsmooth residual stops carry no dual data") {
  const ProblemSpec problem{LinearOperator(Matrix::Identity(2, 2)),
                            vec({0.5, -0.25}), Misfit::two_norm(),
                            Regularizer::one_norm()};
  const ValueSample s = evaluate(problem, 2.0, 1e-9);
  CHECK(s.solver_status == SpgStatus::nonsmooth_stop);
  CHECK(s.v == doctest::Approx(0.0));
  CHECK_FALSE(s.differentiable);
  CHECK_FALSE(s.duality_gap.has_value());
  CHECK_THROWS_AS(tau_derivative(s), nonsmooth_error);
  CHECK_THROWS_AS(b_subgradient(s), nonsmooth_error);
}

TEST_SUITE_END();
