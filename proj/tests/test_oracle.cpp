#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "json.hpp"
#include "levelset/oracle.hpp"
#include "levelset/operators.hpp"
#include "levelset/rng.hpp"
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
}  // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("grid search reproduces the identity-instance values") {
  const ProblemSpec problem = figure1();
  GridSpec grid;
  grid.points_per_dim = 41;
  grid.refinements = 3;
  CHECK(std::abs(brute_force_value(problem, 1.0, grid) - 1.0) <= 5e-3);
  CHECK(std::abs(brute_force_value(problem, 2.0, grid) - 0.25) <= 5e-3);
  CHECK(brute_force_value(problem, 0.0, grid) == doctest::Approx(2.5));
}

TEST_CASE("grid search rejects what it cannot certify") {
  Matrix a(2, 4);
  a.setOnes();
  const ProblemSpec wide{LinearOperator(a), vec({1.0, 1.0}),
                         Misfit::least_squares(), Regularizer::one_norm()};
  CHECK_THROWS_AS(brute_force_value(wide, 1.0, {}), std::invalid_argument);
}

TEST_CASE("projection oracle matches the closed-form projection") {
  const Vector p = projection_qp_oracle(Regularizer::nonneg_one_norm(),
                                        vec({3.0, -1.0}), 2.0);
  CHECK(p[0] == doctest::Approx(2.0));
  CHECK(p[1] == doctest::Approx(0.0));

  Rng rng(40);
  for (const auto& reg :
       {Regularizer::one_norm(), Regularizer::nonneg_one_norm(),
        Regularizer::one_norm(Cone::from_mask({true, false, true, false}))}) {
    for (int trial = 0; trial < 25; ++trial) {
      Vector x(4);
      for (Index i = 0; i < 4; ++i) x[i] = 3.0 * rng.normal();
      const double tau = 0.2 + 2.0 * rng.uniform();
      const Vector oracle = projection_qp_oracle(reg, x, tau);
      const Vector closed = reg.project_level_set(x, tau);
      CHECK((oracle - closed).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
  }

  CHECK_THROWS_AS(projection_qp_oracle(Regularizer::two_norm(), vec({1.0}),
                                       1.0),
                  std::domain_error);
  CHECK_THROWS_AS(
      projection_qp_oracle(Regularizer::one_norm(),
                           Vector::Zero(7), 1.0),
      std::invalid_argument);
}

TEST_CASE("finite-difference derivative on the identity instance") {
  const ProblemSpec problem = figure1();
  CHECK(fd_derivative(problem, 1.5, 1e-4) == doctest::Approx(-0.75).epsilon(1e-5));
  CHECK(fd_derivative(problem, 2.0, 1e-4) == doctest::Approx(-0.5).epsilon(1e-5));
  CHECK_THROWS_AS(fd_derivative(problem, 0.0, 1e-4), std::invalid_argument);
  CHECK_THROWS_AS(fd_derivative(problem, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("multiplier grid oracle agrees with the closed forms") {
  Rng rng(51);
  for (const auto& reg :
       {Regularizer::one_norm(), Regularizer::nonneg_one_norm(),
        Regularizer::two_norm(), Regularizer::qs(1.0),
        Regularizer::qs(0.5, QsCurvature::zero), Regularizer::vapnik(0.2),
        Regularizer::two_norm(Cone::from_mask({true, false, true}))}) {
    for (int trial = 0; trial < 12; ++trial) {
      Vector s(3);
      for (Index i = 0; i < 3; ++i) s[i] = 2.0 * rng.normal();
      if (trial % 3 == 0) s = -s.cwiseAbs();  // exercise the cone branch
      const double tau = 0.1 + 2.0 * rng.uniform();
      const double closed = reg.multiplier_from_dual(s, tau);
      const double oracle = mu_grid_oracle(reg, s, tau);
      CHECK(std::abs(closed - oracle) <= 1e-4 * (1.0 + std::abs(oracle)));
    }
  }

  // The worked example: kappa=1 identity-curvature QS at s=1, tau=2.
  CHECK(std::abs(mu_grid_oracle(Regularizer::qs(1.0), vec({1.0}), 2.0) - 1.0) <=
        1e-4);
  CHECK_THROWS_AS(mu_grid_oracle(Regularizer::one_norm(), vec({1.0}), 0.0),
                  std::invalid_argument);
}

TEST_CASE("comparison suite passes clean and flags an injected bug") {
  VerifyOptions fast;
  fast.mu_cases = 24;
  fast.projection_cases = 40;
  fast.value_cases = 6;
  fast.derivative_cases = 4;
  fast.inverse_cases = 1;

  const VerifySummary clean = run_comparison_suite(fast);
  CHECK(clean.all_passed);
  CHECK(clean.failures == 0);
  CHECK_FALSE(clean.reports.empty());
  for (const auto& report : clean.reports) {
    CAPTURE(report.quantity);
    CHECK(report.passed);
  }

  VerifyOptions corrupted = fast;
  corrupted.inject_mu_bug = true;
  const VerifySummary flagged = run_comparison_suite(corrupted);
  CHECK_FALSE(flagged.all_passed);
  CHECK(flagged.failures > 0);
  bool mu_flagged = false;
  for (const auto& report : flagged.reports) {
    if (!report.passed && report.quantity.find("mu") != std::string::npos) {
      mu_flagged = true;
    }
  }
  CHECK(mu_flagged);
}

TEST_CASE("verification report serializes to JSON") {
  VerifyOptions tiny;
  tiny.mu_cases = 8;
  tiny.projection_cases = 10;
  tiny.value_cases = 2;
  tiny.derivative_cases = 2;
  tiny.inverse_cases = 0;
  const VerifySummary summary = run_comparison_suite(tiny);
  const std::string text = reports_to_json(summary);

  const nlohmann::json doc = nlohmann::json::parse(text);
  CHECK(doc.contains("all_passed"));
  CHECK(doc["all_passed"].get<bool>() == summary.all_passed);
  CHECK(doc["failures"].get<int>() == summary.failures);
  REQUIRE(doc.contains("reports"));
  CHECK(doc["reports"].size() == summary.reports.size());
  if (!summary.reports.empty()) {
    const auto& first = doc["reports"][0];
    CHECK(first.contains("quantity"));
    CHECK(first.contains("oracle_value"));
    CHECK(first.contains("library_value"));
    CHECK(first.contains("passed"));
  }
}

TEST_SUITE_END();
