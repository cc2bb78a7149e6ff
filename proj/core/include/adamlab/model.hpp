#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "adamlab/rng.hpp"
#include "adamlab/types.hpp"

namespace adamlab {

/// Per-coordinate standard deviation of the additive Gaussian gradient noise.
/// In deterministic mode the sampled gradient is exactly grad F and every
/// noise moment is zero; `sigma` is still validated but otherwise ignored.
struct GaussianNoiseSpec {
  Vec sigma;
  bool deterministic = false;

  /// Effective standard deviation (zero in deterministic mode).
  Vec effective_sigma() const;
  void validate(std::size_t dim) const;
};

/// The critical set of F, listed explicitly.
struct CriticalSet {
  std::vector<Vec> points;
};

struct Capabilities {
  bool has_hessian = false;
  bool has_jacobian_S = false;
  bool has_critical_points = false;
};

/// Moments of the stochastic gradient g = grad f(x, xi) at a point x.
struct NoiseMoments {
  Mat grad_outer;  ///< E[g g^T]
  Mat sq_cov;      ///< Cov(g^2) (componentwise squares)
  Mat cross;       ///< E[g (g^2 - S(x))^T]
};

/// A stochastic objective F(x) = E f(x, xi) with hand-coded derivatives.
///
/// Implementations are immutable once built; randomness only enters through
/// the Stream handed to sample_gradient.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Capabilities capabilities() const = 0;

  virtual double value(VecRef x) const = 0;
  virtual void gradient(VecRef x, VecOut out) const = 0;
  /// S(x) = E[grad f(x, xi)^2], componentwise.
  virtual void second_moment(VecRef x, VecOut out) const = 0;
  virtual void sample_gradient(VecRef x, Stream& stream, VecOut out) const = 0;
  virtual NoiseMoments noise_moments(VecRef x) const = 0;

  /// Optional capabilities; the defaults throw std::logic_error.
  virtual Mat hessian(VecRef x) const;
  virtual Mat jacobian_S(VecRef x) const;
  virtual const CriticalSet& critical_set() const;

  /// Lojasiewicz exponent at the critical points, when known.
  virtual std::optional<double> lojasiewicz_theta() const { return std::nullopt; }

  Vec gradient(VecRef x) const;
  Vec second_moment(VecRef x) const;
  Vec sample_gradient(VecRef x, Stream& stream) const;
};

using ProblemPtr = std::shared_ptr<const StochasticProblem>;

/// F(x) = 1/2 sum a_i x_i^2, grad f = A x + noise.
ProblemPtr make_diag_quadratic(const Vec& diag, const GaussianNoiseSpec& noise);

/// F(x) = sum 1/4 (x_i^2 - 1)^2, critical grid {-1, 0, 1}^d.
ProblemPtr make_double_well(const GaussianNoiseSpec& noise);

/// F(x) = x^(2p) on the real line, Lojasiewicz exponent 1/(2p) at 0.
ProblemPtr make_scalar_power(int p, const GaussianNoiseSpec& noise);

/// Distance from x to the nearest listed critical point.
double distance_to_critical_set(const StochasticProblem& problem, VecRef x);

}  // namespace adamlab
