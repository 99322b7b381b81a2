#include "levelset/penalties.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kv_params.hpp"

namespace levelset {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Slack accepted when testing membership in a conjugate's domain.  Gradients
// of the primal land exactly on the boundary, so an exact test would reject
// them for roundoff reasons.
constexpr double kDomainSlack = 1e-10;

std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Misfit Misfit::huber(double kappa) {
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("huber: kappa must be positive");
  }
  Misfit m(MisfitKind::huber);
  m.kappa_ = kappa;
  return m;
}

Misfit Misfit::vapnik(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("vapnik: epsilon must be positive");
  }
  Misfit m(MisfitKind::vapnik);
  m.epsilon_ = epsilon;
  return m;
}

Misfit Misfit::student_t(double nu) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("student-t: nu must be positive");
  }
  Misfit m(MisfitKind::student_t);
  m.nu_ = nu;
  return m;
}

Misfit Misfit::parse(std::string_view text) {
  auto spec = detail::parse_spec_string(text, "misfit");
  Misfit out = least_squares();
  if (spec.name == "least-squares" || spec.name == "ls") {
    out = least_squares();
  } else if (spec.name == "two-norm") {
    out = two_norm();
  } else if (spec.name == "huber") {
    out = huber(detail::take_number(spec, "kappa", 1.0, "misfit"));
  } else if (spec.name == "vapnik") {
    out = vapnik(detail::take_number(spec, "epsilon", 0.1, "misfit"));
  } else if (spec.name == "student-t") {
    out = student_t(detail::take_number(spec, "nu", 1.0, "misfit"));
  } else {
    throw std::invalid_argument("misfit: unknown kind '" + spec.name + "'");
  }
  detail::reject_leftovers(spec, "misfit");
  return out;
}

std::string Misfit::to_string() const {
  switch (kind_) {
    case MisfitKind::least_squares:
      return "least-squares";
    case MisfitKind::two_norm:
      return "two-norm";
    case MisfitKind::huber:
      return "huber:kappa=" + format_param(kappa_);
    case MisfitKind::vapnik:
      return "vapnik:epsilon=" + format_param(epsilon_);
    case MisfitKind::student_t:
      return "student-t:nu=" + format_param(nu_);
  }
  throw std::logic_error("misfit: bad kind");
}

double Misfit::value(const Vector& r) const {
  switch (kind_) {
    case MisfitKind::least_squares:
      return 0.5 * r.squaredNorm();
    case MisfitKind::two_norm:
      return r.norm();
    case MisfitKind::huber: {
      double total = 0.0;
      for (Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        total += (a <= kappa_) ? 0.5 * a * a : kappa_ * a - 0.5 * kappa_ * kappa_;
      }
      return total;
    }
    case MisfitKind::vapnik: {
      double total = 0.0;
      for (Index i = 0; i < r.size(); ++i) {
        total += std::max(0.0, std::abs(r[i]) - epsilon_);
      }
      return total;
    }
    case MisfitKind::student_t: {
      double total = 0.0;
      for (Index i = 0; i < r.size(); ++i) {
        total += std::log1p(r[i] * r[i] / nu_);
      }
      return total;
    }
  }
  throw std::logic_error("misfit: bad kind");
}

bool Misfit::differentiable_at(const Vector& r) const {
  switch (kind_) {
    case MisfitKind::least_squares:
    case MisfitKind::huber:
    case MisfitKind::student_t:
      return true;
    case MisfitKind::two_norm:
      return r.norm() > 0.0;
    case MisfitKind::vapnik:
      for (Index i = 0; i < r.size(); ++i) {
        if (std::abs(r[i]) == epsilon_) return false;
      }
      return true;
  }
  throw std::logic_error("misfit: bad kind");
}

Vector Misfit::gradient(const Vector& r) const {
  switch (kind_) {
    case MisfitKind::least_squares:
      return r;
    case MisfitKind::two_norm: {
      const double norm = r.norm();
      if (norm == 0.0) {
        throw nonsmooth_error("two-norm misfit: no gradient at r = 0");
      }
      return r / norm;
    }
    case MisfitKind::huber: {
      Vector g(r.size());
      for (Index i = 0; i < r.size(); ++i) {
        g[i] = std::clamp(r[i], -kappa_, kappa_);
      }
      return g;
    }
    case MisfitKind::vapnik: {
      Vector g(r.size());
      for (Index i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        if (a == epsilon_) {
          throw nonsmooth_error(
              "vapnik misfit: no gradient on the insensitivity boundary");
        }
        g[i] = (a < epsilon_) ? 0.0 : (r[i] > 0.0 ? 1.0 : -1.0);
      }
      return g;
    }
    case MisfitKind::student_t: {
      Vector g(r.size());
      for (Index i = 0; i < r.size(); ++i) {
        g[i] = 2.0 * r[i] / (nu_ + r[i] * r[i]);
      }
      return g;
    }
  }
  throw std::logic_error("misfit: bad kind");
}

double Misfit::conjugate(const Vector& u) const {
  switch (kind_) {
    case MisfitKind::least_squares:
      return 0.5 * u.squaredNorm();
    case MisfitKind::two_norm:
      return (u.norm() <= 1.0 + kDomainSlack) ? 0.0 : kInf;
    case MisfitKind::huber: {
      const double slack = kDomainSlack * std::max(1.0, kappa_);
      if (u.lpNorm<Eigen::Infinity>() > kappa_ + slack) return kInf;
      return 0.5 * u.squaredNorm();
    }
    case MisfitKind::vapnik: {
      if (u.lpNorm<Eigen::Infinity>() > 1.0 + kDomainSlack) return kInf;
      return epsilon_ * u.lpNorm<1>();
    }
    case MisfitKind::student_t:
      throw std::domain_error(
          "student-t misfit is nonconvex and has no conjugate");
  }
  throw std::logic_error("misfit: bad kind");
}

}  // namespace levelset
