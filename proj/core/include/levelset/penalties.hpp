#pragma once

#include <string>
#include <string_view>

#include "levelset/types.hpp"

namespace levelset {

enum class MisfitKind { least_squares, two_norm, huber, vapnik, student_t };

// Penalty rho measuring the data misfit r = b - Ax.  Each instance knows its
// value, gradient, and convex conjugate.  The student-t penalty is nonconvex
// and has no usable conjugate; asking for one throws.
class Misfit {
 public:
  static Misfit least_squares() { return Misfit(MisfitKind::least_squares); }
  static Misfit two_norm() { return Misfit(MisfitKind::two_norm); }
  static Misfit huber(double kappa);
  static Misfit vapnik(double epsilon);
  static Misfit student_t(double nu);

  // Accepts e.g. "least-squares", "huber", "huber:kappa=0.5",
  // "vapnik:epsilon=0.2", "student-t:nu=2".
  static Misfit parse(std::string_view text);
  std::string to_string() const;

  MisfitKind kind() const { return kind_; }
  bool convex() const { return kind_ != MisfitKind::student_t; }
  // True when a conjugate is available (all convex kinds).
  bool has_conjugate() const { return convex(); }

  double kappa() const { return kappa_; }
  double epsilon() const { return epsilon_; }
  double nu() const { return nu_; }

  double value(const Vector& r) const;
  bool differentiable_at(const Vector& r) const;
  // Throws nonsmooth_error at kinks (two-norm at 0, vapnik at |r_i| = eps).
  Vector gradient(const Vector& r) const;
  // Convex conjugate rho*(u); +inf outside the domain.  Throws
  // std::domain_error for student-t.
  double conjugate(const Vector& u) const;

 private:
  explicit Misfit(MisfitKind kind) : kind_(kind) {}

  MisfitKind kind_;
  double kappa_ = 1.0;
  double epsilon_ = 0.1;
  double nu_ = 1.0;
};

}  // namespace levelset
