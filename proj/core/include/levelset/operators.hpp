#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "levelset/types.hpp"

namespace levelset {

// Linear map together with its adjoint.  Either wraps a dense matrix or a
// user-supplied forward/adjoint function pair; both paths check dimensions
// on every application.
class LinearOperator {
 public:
  using Apply = std::function<Vector(const Vector&)>;

  explicit LinearOperator(Matrix dense);
  LinearOperator(Index rows, Index cols, Apply forward, Apply adjoint);

  static LinearOperator identity(Index n);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Vector apply(const Vector& x) const;          // A x
  Vector apply_adjoint(const Vector& y) const;  // A^T y

  bool is_dense() const { return dense_.has_value(); }
  // Only valid when is_dense(); throws otherwise.
  const Matrix& dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::optional<Matrix> dense_;
  Apply forward_;
  Apply adjoint_;
};

// m x n matrix with i.i.d. N(0, variance) entries, reproducible by seed.
Matrix gaussian_matrix(Index rows, Index cols, double variance,
                       std::uint64_t seed);
LinearOperator gaussian_ensemble(Index rows, Index cols, double variance,
                                 std::uint64_t seed);

// Plain comma-separated values, one matrix row per line, full precision.
void save_matrix_csv(const std::string& path, const Matrix& a);
Matrix load_matrix_csv(const std::string& path);
void save_vector_csv(const std::string& path, const Vector& v);
Vector load_vector_csv(const std::string& path);

}  // namespace levelset
