#pragma once

#include "levelset/operators.hpp"
#include "levelset/penalties.hpp"
#include "levelset/regularizers.hpp"
#include "levelset/types.hpp"

namespace levelset {

// One instance of the level-constrained problem family
//     P(b,tau):  minimize rho(b - Ax)  subject to  phi(x) <= tau.
struct ProblemSpec {
  LinearOperator op;
  Vector b;
  Misfit misfit = Misfit::least_squares();
  Regularizer reg = Regularizer::one_norm();

  void validate() const {
    if (b.size() != op.rows()) {
      throw std::invalid_argument("ProblemSpec: b has size " +
                                  std::to_string(b.size()) + ", operator has " +
                                  std::to_string(op.rows()) + " rows");
    }
  }
};

// The worked 2-d instance used throughout the tests: A = I2, b = (2,1),
// least-squares misfit, l1 regularizer.  Its value function is piecewise
// quadratic with closed-form values, which makes it a convenient fixture.
inline ProblemSpec figure1_instance() {
  Vector b(2);
  b << 2.0, 1.0;
  return ProblemSpec{LinearOperator::identity(2), b, Misfit::least_squares(),
                     Regularizer::one_norm()};
}

}  // namespace levelset
