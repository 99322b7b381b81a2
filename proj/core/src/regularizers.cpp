#include "levelset/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kv_params.hpp"

namespace levelset {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double huber_sum(const Vector& x, double kappa) {
  double total = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    total += (a <= kappa) ? 0.5 * a * a : kappa * a - 0.5 * kappa * kappa;
  }
  return total;
}

// Projection onto the l1 ball of radius tau via sort-and-threshold.
// Exact up to roundoff; ties share the sort's stable order but the
// projection itself is unique.
Vector l1_ball_project(const Vector& y, double tau) {
  const Index n = y.size();
  std::vector<double> mags(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    mags[static_cast<std::size_t>(i)] = std::abs(y[i]);
    total += mags[static_cast<std::size_t>(i)];
  }
  if (total <= tau) return y;
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double prefix = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    prefix += mags[k];
    const double candidate = (prefix - tau) / static_cast<double>(k + 1);
    if (k + 1 == mags.size() || mags[k + 1] <= candidate) {
      theta = candidate;
      break;
    }
  }
  Vector p(n);
  for (Index i = 0; i < n; ++i) {
    const double m = std::abs(y[i]) - theta;
    p[i] = (m > 0.0) ? (y[i] > 0.0 ? m : -m) : 0.0;
  }
  return p;
}

// Scalar prox of lambda * huber_kappa applied coordinatewise.
Vector huber_prox(const Vector& x, double lambda, double kappa) {
  Vector p(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    double m = (a <= (1.0 + lambda) * kappa) ? a / (1.0 + lambda)
                                             : a - lambda * kappa;
    p[i] = (x[i] >= 0.0) ? m : -m;
  }
  return p;
}

}  // namespace

Cone Cone::from_mask(std::vector<bool> mask) {
  Cone c(Tag::masked);
  c.mask_ = std::move(mask);
  return c;
}

bool Cone::restricts(Index i, Index n) const {
  switch (tag_) {
    case Tag::free_all:
      return false;
    case Tag::nonneg_all:
      return true;
    case Tag::masked:
      if (static_cast<Index>(mask_.size()) != n) {
        throw std::invalid_argument("Cone: mask length " +
                                    std::to_string(mask_.size()) +
                                    " does not match dimension " +
                                    std::to_string(n));
      }
      return mask_[static_cast<std::size_t>(i)];
  }
  throw std::logic_error("Cone: bad tag");
}

bool Cone::contains(const Vector& x) const {
  for (Index i = 0; i < x.size(); ++i) {
    if (restricts(i, x.size()) && x[i] < 0.0) return false;
  }
  return true;
}

Vector Cone::project(const Vector& x) const {
  Vector y = x;
  for (Index i = 0; i < x.size(); ++i) {
    if (restricts(i, x.size()) && y[i] < 0.0) y[i] = 0.0;
  }
  return y;
}

std::string Cone::to_string() const {
  switch (tag_) {
    case Tag::free_all:
      return "free";
    case Tag::nonneg_all:
      return "nonneg";
    case Tag::masked: {
      std::string s;
      s.reserve(mask_.size());
      for (bool bit : mask_) s.push_back(bit ? '1' : '0');
      return s;
    }
  }
  throw std::logic_error("Cone: bad tag");
}

Cone Cone::parse(std::string_view text) {
  if (text == "free") return all_free();
  if (text == "nonneg") return nonneg();
  std::vector<bool> mask;
  mask.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') {
      throw std::invalid_argument("Cone: expected 'free', 'nonneg', or 0/1 "
                                  "digits, got '" +
                                  std::string(text) + "'");
    }
    mask.push_back(c == '1');
  }
  if (mask.empty()) {
    throw std::invalid_argument("Cone: empty descriptor");
  }
  return from_mask(std::move(mask));
}

Regularizer Regularizer::one_norm(Cone cone) {
  Regularizer r(RegularizerKind::one_norm);
  r.cone_ = std::move(cone);
  return r;
}

Regularizer Regularizer::nonneg_one_norm() {
  Regularizer r(RegularizerKind::nonneg_one_norm);
  r.cone_ = Cone::nonneg();
  return r;
}

Regularizer Regularizer::two_norm(Cone cone) {
  Regularizer r(RegularizerKind::two_norm);
  r.cone_ = std::move(cone);
  return r;
}

Regularizer Regularizer::qs(double kappa, QsCurvature curvature) {
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("qs: kappa must be positive");
  }
  Regularizer r(RegularizerKind::qs);
  r.kappa_ = kappa;
  r.curvature_ = curvature;
  return r;
}

Regularizer Regularizer::vapnik(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("vapnik: epsilon must be positive");
  }
  Regularizer r(RegularizerKind::affine_qs);
  r.epsilon_ = epsilon;
  return r;
}

Regularizer Regularizer::parse(std::string_view text) {
  auto spec = detail::parse_spec_string(text, "regularizer");
  Regularizer out = one_norm();
  if (spec.name == "one-norm" || spec.name == "l1") {
    out = one_norm(Cone::parse(detail::take_string(spec, "cone", "free")));
  } else if (spec.name == "nonneg-one-norm" || spec.name == "nonneg-l1") {
    out = nonneg_one_norm();
  } else if (spec.name == "two-norm" || spec.name == "l2") {
    out = two_norm(Cone::parse(detail::take_string(spec, "cone", "free")));
  } else if (spec.name == "qs") {
    const double kappa = detail::take_number(spec, "kappa", 1.0, "regularizer");
    const std::string b = detail::take_string(spec, "b", "identity");
    if (b != "identity" && b != "zero") {
      throw std::invalid_argument("regularizer: qs curvature must be "
                                  "'identity' or 'zero', got '" +
                                  b + "'");
    }
    out = qs(kappa, b == "zero" ? QsCurvature::zero : QsCurvature::identity);
  } else if (spec.name == "vapnik") {
    out = vapnik(detail::take_number(spec, "epsilon", 0.1, "regularizer"));
  } else {
    throw std::invalid_argument("regularizer: unknown kind '" + spec.name +
                                "'");
  }
  detail::reject_leftovers(spec, "regularizer");
  return out;
}

std::string Regularizer::to_string() const {
  switch (kind_) {
    case RegularizerKind::one_norm:
      return cone_.trivial() ? "one-norm" : "one-norm:cone=" + cone_.to_string();
    case RegularizerKind::nonneg_one_norm:
      return "nonneg-l1";
    case RegularizerKind::two_norm:
      return cone_.trivial() ? "two-norm" : "two-norm:cone=" + cone_.to_string();
    case RegularizerKind::qs:
      return "qs:kappa=" + format_number(kappa_) +
             (curvature_ == QsCurvature::zero ? ",b=zero" : "");
    case RegularizerKind::affine_qs:
      return "vapnik:epsilon=" + format_number(epsilon_);
  }
  throw std::logic_error("regularizer: bad kind");
}

double Regularizer::value(const Vector& x) const {
  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm:
      return cone_.contains(x) ? x.lpNorm<1>() : kInf;
    case RegularizerKind::two_norm:
      return cone_.contains(x) ? x.norm() : kInf;
    case RegularizerKind::qs:
      return curvature_ == QsCurvature::identity ? huber_sum(x, kappa_)
                                                 : kappa_ * x.lpNorm<1>();
    case RegularizerKind::affine_qs: {
      double total = 0.0;
      for (Index i = 0; i < x.size(); ++i) {
        total += std::max(0.0, std::abs(x[i]) - epsilon_);
      }
      return total;
    }
  }
  throw std::logic_error("regularizer: bad kind");
}

double Regularizer::polar_gauge(const Vector& z) const {
  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm:
      return z.size() == 0 ? 0.0 : z.lpNorm<Eigen::Infinity>();
    case RegularizerKind::two_norm:
      return z.norm();
    case RegularizerKind::qs:
    case RegularizerKind::affine_qs:
      throw std::domain_error(
          "polar_gauge: not a gauge kind (use multiplier_from_dual)");
  }
  throw std::logic_error("regularizer: bad kind");
}

// Gauge of z with respect to the polar of U intersected with the cone's
// polar structure;  this is the quantity that both the level-set support
// function and the multiplier recovery reduce to for gauge-plus-cone kinds.
double Regularizer::effective_dual_gauge(const Vector& z) const {
  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm: {
      double best = 0.0;
      for (Index i = 0; i < z.size(); ++i) {
        const double candidate =
            cone_.restricts(i, z.size()) ? z[i] : std::abs(z[i]);
        best = std::max(best, candidate);
      }
      return best;
    }
    case RegularizerKind::two_norm:
      return cone_.project(z).norm();
    default:
      throw std::domain_error("effective_dual_gauge: gauge kinds only");
  }
}

Vector Regularizer::project_level_set(const Vector& x, double tau) const {
  if (tau < 0.0) {
    throw std::invalid_argument("project_level_set: tau must be >= 0");
  }
  if (kind_ == RegularizerKind::affine_qs) {
    throw std::domain_error(
        "project_level_set: affine-qs projection is unsupported");
  }
  // Every projectable kind vanishes only at the origin, so lev(phi,0)={0}.
  if (tau == 0.0) return Vector::Zero(x.size());

  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm:
      return l1_ball_project(cone_.project(x), tau);
    case RegularizerKind::two_norm: {
      Vector y = cone_.project(x);
      const double nrm = y.norm();
      if (nrm > tau) y *= tau / nrm;
      return y;
    }
    case RegularizerKind::qs: {
      if (curvature_ == QsCurvature::zero) {
        return l1_ball_project(x, tau / kappa_);
      }
      if (huber_sum(x, kappa_) <= tau) return x;
      // Scalar dual search: p(lambda) = prox of lambda*phi, and the level
      // value huber(p(lambda)) decreases continuously to 0, so bisection on
      // lambda locates the boundary.  We keep the upper endpoint, whose
      // point is feasible by construction.
      double lo = 0.0, hi = 1.0;
      int guard = 0;
      while (huber_sum(huber_prox(x, hi, kappa_), kappa_) > tau) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 200) {
          throw std::runtime_error("project_level_set: qs bracket failure");
        }
      }
      for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (huber_sum(huber_prox(x, mid, kappa_), kappa_) > tau) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return huber_prox(x, hi, kappa_);
    }
    case RegularizerKind::affine_qs:
      break;  // unreachable, rejected above
  }
  throw std::logic_error("regularizer: bad kind");
}

double Regularizer::support_level_set(const Vector& z, double tau) const {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("support_level_set: tau must be positive");
  }
  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm:
    case RegularizerKind::two_norm:
      return tau * effective_dual_gauge(z);
    case RegularizerKind::qs: {
      const double gauge_u = z.size() == 0 ? 0.0
                                           : z.lpNorm<Eigen::Infinity>() / kappa_;
      const double norm_b = curvature_ == QsCurvature::identity ? z.norm() : 0.0;
      const double mu = std::max(gauge_u, norm_b / std::sqrt(2.0 * tau));
      return mu == 0.0 ? 0.0 : tau * mu + norm_b * norm_b / (2.0 * mu);
    }
    case RegularizerKind::affine_qs:
      return tau * (z.size() == 0 ? 0.0 : z.lpNorm<Eigen::Infinity>()) +
             epsilon_ * z.lpNorm<1>();
  }
  throw std::logic_error("regularizer: bad kind");
}

double Regularizer::multiplier_from_dual(const Vector& s, double tau) const {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("multiplier_from_dual: tau must be positive");
  }
  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm:
    case RegularizerKind::two_norm:
      return effective_dual_gauge(s);
    case RegularizerKind::qs: {
      const double gauge_u = s.size() == 0 ? 0.0
                                           : s.lpNorm<Eigen::Infinity>() / kappa_;
      const double norm_b = curvature_ == QsCurvature::identity ? s.norm() : 0.0;
      return std::max(gauge_u, norm_b / std::sqrt(2.0 * tau));
    }
    case RegularizerKind::affine_qs:
      return s.size() == 0 ? 0.0 : s.lpNorm<Eigen::Infinity>();
  }
  throw std::logic_error("regularizer: bad kind");
}

double Regularizer::limiting_multiplier(const Vector& s) const {
  switch (kind_) {
    case RegularizerKind::one_norm:
    case RegularizerKind::nonneg_one_norm:
    case RegularizerKind::two_norm:
      return effective_dual_gauge(s);
    case RegularizerKind::qs:
      if (curvature_ == QsCurvature::zero) {
        return (s.size() == 0 ? 0.0 : s.lpNorm<Eigen::Infinity>()) / kappa_;
      }
      return s.isZero(0.0) ? 0.0 : kInf;
    case RegularizerKind::affine_qs:
      return s.size() == 0 ? 0.0 : s.lpNorm<Eigen::Infinity>();
  }
  throw std::logic_error("regularizer: bad kind");
}

}  // namespace levelset
