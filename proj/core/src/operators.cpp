#include "levelset/operators.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "levelset/rng.hpp"

namespace levelset {

LinearOperator::LinearOperator(Matrix dense)
    : rows_(dense.rows()), cols_(dense.cols()), dense_(std::move(dense)) {}

LinearOperator::LinearOperator(Index rows, Index cols, Apply forward,
                               Apply adjoint)
    : rows_(rows),
      cols_(cols),
      forward_(std::move(forward)),
      adjoint_(std::move(adjoint)) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("LinearOperator: dimensions must be positive");
  }
  if (!forward_ || !adjoint_) {
    throw std::invalid_argument(
        "LinearOperator: both forward and adjoint maps are required");
  }
}

LinearOperator LinearOperator::identity(Index n) {
  return LinearOperator(Matrix::Identity(n, n));
}

Vector LinearOperator::apply(const Vector& x) const {
  if (x.size() != cols_) {
    throw std::invalid_argument("LinearOperator::apply: expected size " +
                                std::to_string(cols_) + ", got " +
                                std::to_string(x.size()));
  }
  if (dense_) return *dense_ * x;
  Vector y = forward_(x);
  if (y.size() != rows_) {
    throw std::invalid_argument(
        "LinearOperator::apply: forward map returned wrong size");
  }
  return y;
}

Vector LinearOperator::apply_adjoint(const Vector& y) const {
  if (y.size() != rows_) {
    throw std::invalid_argument(
        "LinearOperator::apply_adjoint: expected size " +
        std::to_string(rows_) + ", got " + std::to_string(y.size()));
  }
  if (dense_) return dense_->transpose() * y;
  Vector x = adjoint_(y);
  if (x.size() != cols_) {
    throw std::invalid_argument(
        "LinearOperator::apply_adjoint: adjoint map returned wrong size");
  }
  return x;
}

const Matrix& LinearOperator::dense() const {
  if (!dense_) {
    throw std::logic_error("LinearOperator::dense: operator is matrix-free");
  }
  return *dense_;
}

Matrix gaussian_matrix(Index rows, Index cols, double variance,
                       std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("gaussian_matrix: dimensions must be positive");
  }
  if (variance < 0.0) {
    throw std::invalid_argument("gaussian_matrix: variance must be >= 0");
  }
  Rng rng(seed);
  const double stddev = std::sqrt(variance);
  Matrix a(rows, cols);
  // Row-major fill order is part of the reproducibility contract.
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      a(i, j) = stddev * rng.normal();
    }
  }
  return a;
}

LinearOperator gaussian_ensemble(Index rows, Index cols, double variance,
                                 std::uint64_t seed) {
  return LinearOperator(gaussian_matrix(rows, cols, variance, seed));
}

void save_matrix_csv(const std::string& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_matrix_csv: cannot open " + path);
  }
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ',';
      out << a(i, j);
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("save_matrix_csv: write failed for " + path);
  }
}

Matrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_matrix_csv: cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("load_matrix_csv: bad entry '" + cell +
                                 "' in " + path);
      }
      while (used < cell.size() &&
             std::isspace(static_cast<unsigned char>(cell[used]))) {
        ++used;
      }
      if (used != cell.size()) {
        throw std::runtime_error("load_matrix_csv: bad entry '" + cell +
                                 "' in " + path);
      }
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("load_matrix_csv: ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::runtime_error("load_matrix_csv: no data in " + path);
  }
  Matrix a(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return a;
}

void save_vector_csv(const std::string& path, const Vector& v) {
  save_matrix_csv(path, v);
}

Vector load_vector_csv(const std::string& path) {
  Matrix a = load_matrix_csv(path);
  if (a.cols() != 1) {
    throw std::runtime_error("load_vector_csv: expected one column in " + path);
  }
  return a.col(0);
}

}  // namespace levelset
