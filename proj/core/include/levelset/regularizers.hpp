#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "levelset/types.hpp"

namespace levelset {

// Per-coordinate nonnegativity constraints.  Covers all of space, the full
// nonnegative orthant, and arbitrary coordinate subsets (e.g. a half-plane).
class Cone {
 public:
  static Cone all_free() { return Cone(Tag::free_all); }
  static Cone nonneg() { return Cone(Tag::nonneg_all); }
  // mask[i] true means coordinate i is constrained to be >= 0.
  static Cone from_mask(std::vector<bool> mask);

  bool trivial() const { return tag_ == Tag::free_all; }
  // Whether coordinate i (of n) is constrained.  Throws if a mask cone is
  // used with a mismatched dimension.
  bool restricts(Index i, Index n) const;
  bool contains(const Vector& x) const;
  Vector project(const Vector& x) const;  // clamp constrained negatives to 0
  std::string to_string() const;          // "free", "nonneg", or 0/1 digits
  static Cone parse(std::string_view text);

  bool operator==(const Cone& other) const = default;

 private:
  enum class Tag { free_all, nonneg_all, masked };
  explicit Cone(Tag tag) : tag_(tag) {}

  Tag tag_;
  std::vector<bool> mask_;
};

enum class RegularizerKind { one_norm, nonneg_one_norm, two_norm, qs, affine_qs };
enum class QsCurvature { zero, identity };

// Regularizer phi, either a gauge plus a cone indicator
//     phi(x) = gauge(x|U) + indicator(x|X)
// or a quadratic-support function
//     phi(x) = sup_{w in U} [<x,w> - 1/2 <w,Bw>]
// with U an axis-aligned box [-kappa,kappa]^n and B zero or the identity.
// The affine-qs kind carries the Vapnik penalty's QS representation
// (H = [I;-I], c = -eps*1, U = [0,1]^{2n}, B = 0) for multiplier analysis;
// it supports value/support/multiplier queries but not projection.
class Regularizer {
 public:
  static Regularizer one_norm(Cone cone = Cone::all_free());
  static Regularizer nonneg_one_norm();
  static Regularizer two_norm(Cone cone = Cone::all_free());
  static Regularizer qs(double kappa, QsCurvature curvature = QsCurvature::identity);
  static Regularizer vapnik(double epsilon);

  // Accepts e.g. "one-norm", "l1", "nonneg-l1", "two-norm",
  // "two-norm:cone=01", "qs:kappa=1", "qs:kappa=1,b=zero",
  // "vapnik:epsilon=0.1".
  static Regularizer parse(std::string_view text);
  std::string to_string() const;

  RegularizerKind kind() const { return kind_; }
  const Cone& cone() const { return cone_; }
  double kappa() const { return kappa_; }
  double epsilon() const { return epsilon_; }
  QsCurvature curvature() const { return curvature_; }

  bool is_gauge() const {
    return kind_ == RegularizerKind::one_norm ||
           kind_ == RegularizerKind::nonneg_one_norm ||
           kind_ == RegularizerKind::two_norm;
  }
  bool supports_projection() const {
    return kind_ != RegularizerKind::affine_qs;
  }

  // phi(x); +inf encodes cone infeasibility.
  double value(const Vector& x) const;

  // gauge(z|U polar) for gauge kinds; the cone does not enter here (the
  // effective dual object for cones appears in support/multiplier instead).
  // Throws std::domain_error for qs/affine-qs kinds.
  double polar_gauge(const Vector& z) const;

  // Euclidean projection onto {phi <= tau}, tau >= 0.  Throws
  // std::domain_error for affine-qs.
  Vector project_level_set(const Vector& x, double tau) const;

  // sigma(z | lev(phi,tau)), tau > 0.
  double support_level_set(const Vector& z, double tau) const;

  // argmin_{mu>=0} [tau*mu + (phi*)^pi(s,mu)] in closed form, tau > 0.
  double multiplier_from_dual(const Vector& s, double tau) const;

  // One-sided limit of multiplier_from_dual as tau -> 0+ (used when
  // reporting sensitivities at tau = 0).  +inf for qs kinds with curvature
  // unless s = 0.
  double limiting_multiplier(const Vector& s) const;

 private:
  explicit Regularizer(RegularizerKind kind) : kind_(kind) {}

  double effective_dual_gauge(const Vector& z) const;

  RegularizerKind kind_;
  Cone cone_ = Cone::all_free();
  double kappa_ = 1.0;
  double epsilon_ = 0.1;
  QsCurvature curvature_ = QsCurvature::identity;
};

}  // namespace levelset
