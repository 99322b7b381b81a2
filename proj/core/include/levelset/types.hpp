#pragma once

#include <Eigen/Core>
#include <stdexcept>

namespace levelset {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Thrown when a derivative or gradient is requested at a point where the
// function in question is not differentiable.
class nonsmooth_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace levelset
