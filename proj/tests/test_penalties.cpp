#include <cmath>
#include <limits>

#include "doctest.h"
#include "levelset/penalties.hpp"
#include "levelset/rng.hpp"
#include "test_util.hpp"

using namespace levelset;
using testutil::vec;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE_BEGIN("penalties");

TEST_CASE("values match the closed forms") {
  CHECK(Misfit::least_squares().value(vec({3.0, 4.0})) ==
        doctest::Approx(12.5));
  CHECK(Misfit::two_norm().value(vec({3.0, 4.0})) == doctest::Approx(5.0));

  // Huber: quadratic inside |r| <= kappa, linear with matched slope outside.
  const Misfit huber = Misfit::huber(1.0);
  CHECK(huber.value(vec({0.5})) == doctest::Approx(0.125));
  CHECK(huber.value(vec({2.0})) == doctest::Approx(1.5));  // 1*2 - 1/2
  CHECK(huber.value(vec({0.5, 2.0})) == doctest::Approx(1.625));

  // Vapnik: epsilon-insensitive hinge.
  const Misfit vapnik = Misfit::vapnik(0.1);
  CHECK(vapnik.value(vec({0.05, -0.3})) == doctest::Approx(0.2));
  CHECK(vapnik.value(vec({0.1})) == doctest::Approx(0.0));

  const Misfit st = Misfit::student_t(1.0);
  CHECK(st.value(vec({1.0})) == doctest::Approx(std::log(2.0)));
  CHECK(st.value(vec({0.0, 0.0})) == doctest::Approx(0.0));
}

TEST_CASE("value at zero residual vanishes for every kind") {
  const Vector zero = Vector::Zero(4);
  for (const auto& m :
       {Misfit::least_squares(), Misfit::two_norm(), Misfit::huber(0.7),
        Misfit::vapnik(0.2), Misfit::student_t(2.0)}) {
    CHECK(m.value(zero) == doctest::Approx(0.0));
  }
}

TEST_CASE("parse and to_string round trip") {
  CHECK(Misfit::parse("ls").kind() == MisfitKind::least_squares);
  CHECK(Misfit::parse("least-squares").to_string() == "least-squares");
  CHECK(Misfit::parse("two-norm").to_string() == "two-norm");
  CHECK(Misfit::parse("huber:kappa=2.5").to_string() == "huber:kappa=2.5");
  CHECK(Misfit::parse("huber").to_string() == "huber:kappa=1");
  CHECK(Misfit::parse("vapnik").to_string() == "vapnik:epsilon=0.1");
  CHECK(Misfit::parse("student-t:nu=3").to_string() == "student-t:nu=3");

  for (const auto& m :
       {Misfit::least_squares(), Misfit::two_norm(), Misfit::huber(0.7),
        Misfit::vapnik(0.2), Misfit::student_t(2.0)}) {
    CHECK(Misfit::parse(m.to_string()).to_string() == m.to_string());
  }

  CHECK_THROWS_AS(Misfit::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::parse("gaussian"), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::parse("huber:kappa=zero"), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::parse("huber:kappa=-1"), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::parse("huber:scale=1"), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::parse("ls:kappa=1"), std::invalid_argument);
}

TEST_CASE("factory parameter validation") {
  CHECK_THROWS_AS(Misfit::huber(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::vapnik(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(Misfit::student_t(0.0), std::invalid_argument);
}

TEST_CASE("convexity and conjugate availability flags") {
  CHECK(Misfit::least_squares().convex());
  CHECK(Misfit::two_norm().convex());
  CHECK(Misfit::huber(1.0).convex());
  CHECK(Misfit::vapnik(0.1).convex());
  CHECK_FALSE(Misfit::student_t(1.0).convex());

  CHECK(Misfit::least_squares().has_conjugate());
  CHECK_FALSE(Misfit::student_t(1.0).has_conjugate());
  CHECK_THROWS_AS(Misfit::student_t(1.0).conjugate(vec({0.0})),
                  std::domain_error);
}

TEST_CASE("gradient matches finite differences where smooth") {
  Rng rng(23);
  const double h = 1e-6;
  for (const auto& m :
       {Misfit::least_squares(), Misfit::huber(0.8), Misfit::student_t(1.5),
        Misfit::two_norm(), Misfit::vapnik(0.25)}) {
    for (int trial = 0; trial < 20; ++trial) {
      Vector r(4);
      for (Index i = 0; i < 4; ++i) r[i] = 2.0 * rng.normal();
      if (!m.differentiable_at(r)) continue;
      // Stay clear of kinks so the finite difference window is smooth too.
      if (m.kind() == MisfitKind::two_norm && r.norm() < 1e-2) continue;
      if (m.kind() == MisfitKind::vapnik || m.kind() == MisfitKind::huber) {
        const double kink =
            m.kind() == MisfitKind::vapnik ? m.epsilon() : m.kappa();
        bool near = false;
        for (Index i = 0; i < 4; ++i) {
          if (std::abs(std::abs(r[i]) - kink) < 1e-2) near = true;
        }
        if (near) continue;
      }
      const Vector grad = m.gradient(r);
      for (Index i = 0; i < 4; ++i) {
        Vector rp = r, rm = r;
        rp[i] += h;
        rm[i] -= h;
        const double fd = (m.value(rp) - m.value(rm)) / (2.0 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("nonsmooth points are reported and gradient refuses them") {
  const Misfit tn = Misfit::two_norm();
  CHECK_FALSE(tn.differentiable_at(Vector::Zero(3)));
  CHECK_THROWS_AS(tn.gradient(Vector::Zero(3)), nonsmooth_error);
  CHECK(tn.differentiable_at(vec({1.0, 0.0, 0.0})));

  const Misfit vap = Misfit::vapnik(0.5);
  CHECK_FALSE(vap.differentiable_at(vec({0.5})));
  CHECK_THROWS_AS(vap.gradient(vec({-0.5})), nonsmooth_error);
  CHECK(vap.differentiable_at(vec({0.2})));  // inside the dead zone
  CHECK(vap.gradient(vec({0.2}))[0] == doctest::Approx(0.0));
}

TEST_CASE("Fenchel-Young holds with equality at gradients") {
  Rng rng(31);
  for (const auto& m : {Misfit::least_squares(), Misfit::two_norm(),
                        Misfit::huber(0.6), Misfit::vapnik(0.3)}) {
    for (int trial = 0; trial < 30; ++trial) {
      Vector r(3), u(3);
      for (Index i = 0; i < 3; ++i) {
        r[i] = 2.0 * rng.normal();
        u[i] = rng.normal();
      }
      // Pull u into the conjugate's domain.
      switch (m.kind()) {
        case MisfitKind::two_norm:
          if (u.norm() > 1.0) u /= (u.norm() * 1.01);
          break;
        case MisfitKind::huber:
          u = u.cwiseMax(-m.kappa()).cwiseMin(m.kappa());
          break;
        case MisfitKind::vapnik:
          u = u.cwiseMax(-1.0).cwiseMin(1.0);
          break;
        default:
          break;
      }
      const double fy = m.value(r) + m.conjugate(u) - r.dot(u);
      CHECK(fy >= -1e-10);

      if (m.differentiable_at(r)) {
        const Vector g = m.gradient(r);
        const double equality = m.value(r) + m.conjugate(g) - r.dot(g);
        CHECK(std::abs(equality) <= 1e-9 * (1.0 + std::abs(m.value(r))));
      }
    }
  }
}

TEST_CASE("conjugate domains are enforced") {
  CHECK(Misfit::two_norm().conjugate(vec({2.0, 0.0})) == kInf);
  CHECK(Misfit::huber(1.0).conjugate(vec({1.5})) == kInf);
  CHECK(Misfit::vapnik(0.1).conjugate(vec({-1.2})) == kInf);
  CHECK(Misfit::least_squares().conjugate(vec({10.0})) ==
        doctest::Approx(50.0));
  // Boundary points are inside (with roundoff slack).
  CHECK(Misfit::two_norm().conjugate(vec({1.0, 0.0})) == doctest::Approx(0.0));
  CHECK(Misfit::vapnik(0.5).conjugate(vec({1.0, -1.0})) ==
        doctest::Approx(1.0));
}

TEST_SUITE_END();
