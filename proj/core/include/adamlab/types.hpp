#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace adamlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;
using VecOut = Eigen::Ref<Eigen::VectorXd>;

/// Raised when an iteration leaves the divergence radius or produces a
/// non-finite value. Carries the iteration index (or the time, for ODEs).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration, double time)
      : std::runtime_error(what), iteration_(iteration), time_(time) {}

  std::size_t iteration() const noexcept { return iteration_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t iteration_;
  double time_;
};

}  // namespace adamlab
