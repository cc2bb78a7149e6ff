#include "adamlab/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adamlab {

Vec GaussianNoiseSpec::effective_sigma() const {
  return deterministic ? Vec::Zero(sigma.size()) : sigma;
}

void GaussianNoiseSpec::validate(std::size_t dim) const {
  if (static_cast<std::size_t>(sigma.size()) != dim)
    throw std::invalid_argument("noise sigma has dimension " + std::to_string(sigma.size()) + ", expected " +
                                std::to_string(dim));
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (!(sigma(i) > 0.0) || !std::isfinite(sigma(i)))
      throw std::invalid_argument("noise sigma entries must be finite and > 0");
}

Mat StochasticProblem::hessian(VecRef) const {
  throw std::logic_error(name() + ": Hessian not available");
}

Mat StochasticProblem::jacobian_S(VecRef) const {
  throw std::logic_error(name() + ": Jacobian of S not available");
}

const CriticalSet& StochasticProblem::critical_set() const {
  throw std::logic_error(name() + ": critical set not available");
}

Vec StochasticProblem::gradient(VecRef x) const {
  Vec out(x.size());
  gradient(x, out);
  return out;
}

Vec StochasticProblem::second_moment(VecRef x) const {
  Vec out(x.size());
  second_moment(x, out);
  return out;
}

Vec StochasticProblem::sample_gradient(VecRef x, Stream& stream) const {
  Vec out(x.size());
  sample_gradient(x, stream, out);
  return out;
}

double distance_to_critical_set(const StochasticProblem& problem, VecRef x) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& p : problem.critical_set().points) best = std::min(best, (x - p).norm());
  return best;
}

namespace {

// Shared machinery for grad f(x, xi) = grad F(x) + sigma . xi, xi ~ N(0, I).
// Subclasses supply F, grad F and the Hessian; everything noise-related
// follows in closed form.
class AdditiveGaussianProblem : public StochasticProblem {
 public:
  AdditiveGaussianProblem(std::size_t dim, const GaussianNoiseSpec& noise)
      : dim_(dim), sigma_(noise.effective_sigma()) {
    noise.validate(dim);
  }

  std::size_t dim() const override { return dim_; }

  Capabilities capabilities() const override { return {true, true, true}; }

  void second_moment(VecRef x, VecOut out) const override {
    gradient(x, out);
    out = out.array().square() + sigma_.array().square();
  }

  void sample_gradient(VecRef x, Stream& stream, VecOut out) const override {
    gradient(x, out);
    for (std::size_t i = 0; i < dim_; ++i)
      if (sigma_(static_cast<Eigen::Index>(i)) > 0.0)
        out(static_cast<Eigen::Index>(i)) += sigma_(static_cast<Eigen::Index>(i)) * stream.gaussian();
  }

  NoiseMoments noise_moments(VecRef x) const override {
    const Vec g = StochasticProblem::gradient(x);
    const Vec s2 = sigma_.array().square();
    NoiseMoments out;
    out.grad_outer = g * g.transpose();
    out.grad_outer.diagonal() += s2;
    // Coordinates of the noise are independent, so both higher blocks are
    // diagonal: Var((g+s xi)^2) = 4 g^2 s^2 + 2 s^4, E[(g+s xi)((g+s xi)^2 - g^2 - s^2)] = 2 g s^2.
    out.sq_cov = (4.0 * g.array().square() * s2.array() + 2.0 * s2.array().square()).matrix().asDiagonal();
    out.cross = (2.0 * g.array() * s2.array()).matrix().asDiagonal();
    return out;
  }

  /// grad S = 2 diag(grad F) Hess F.
  Mat jacobian_S(VecRef x) const override {
    const Vec g = StochasticProblem::gradient(x);
    return 2.0 * g.asDiagonal() * hessian(x);
  }

  const CriticalSet& critical_set() const override { return critical_; }

 protected:
  std::size_t dim_;
  Vec sigma_;
  CriticalSet critical_;
};

class DiagQuadratic final : public AdditiveGaussianProblem {
 public:
  DiagQuadratic(const Vec& diag, const GaussianNoiseSpec& noise)
      : AdditiveGaussianProblem(static_cast<std::size_t>(diag.size()), noise), diag_(diag) {
    critical_.points.push_back(Vec::Zero(diag.size()));
  }

  std::string name() const override { return "diag_quadratic"; }
  double value(VecRef x) const override { return 0.5 * (diag_.array() * x.array().square()).sum(); }
  void gradient(VecRef x, VecOut out) const override { out = diag_.array() * x.array(); }
  Mat hessian(VecRef) const override { return diag_.asDiagonal(); }
  std::optional<double> lojasiewicz_theta() const override { return 0.5; }

 private:
  Vec diag_;
};

class DoubleWell final : public AdditiveGaussianProblem {
 public:
  explicit DoubleWell(const GaussianNoiseSpec& noise)
      : AdditiveGaussianProblem(static_cast<std::size_t>(noise.sigma.size()), noise) {
    // Enumerate {-1, 0, 1}^d in base 3.
    std::size_t count = 1;
    for (std::size_t i = 0; i < dim_; ++i) count *= 3;
    for (std::size_t code = 0; code < count; ++code) {
      Vec p(static_cast<Eigen::Index>(dim_));
      std::size_t c = code;
      for (std::size_t i = 0; i < dim_; ++i, c /= 3) p(static_cast<Eigen::Index>(i)) = static_cast<double>(c % 3) - 1.0;
      critical_.points.push_back(std::move(p));
    }
  }

  std::string name() const override { return "double_well"; }
  double value(VecRef x) const override { return 0.25 * (x.array().square() - 1.0).square().sum(); }
  void gradient(VecRef x, VecOut out) const override { out = x.array() * (x.array().square() - 1.0); }
  Mat hessian(VecRef x) const override { return (3.0 * x.array().square() - 1.0).matrix().asDiagonal(); }
  std::optional<double> lojasiewicz_theta() const override { return 0.5; }
};

class ScalarPower final : public AdditiveGaussianProblem {
 public:
  ScalarPower(int p, const GaussianNoiseSpec& noise) : AdditiveGaussianProblem(1, noise), p_(p) {
    critical_.points.push_back(Vec::Zero(1));
  }

  std::string name() const override { return "scalar_power"; }
  double value(VecRef x) const override { return std::pow(x(0), 2 * p_); }
  void gradient(VecRef x, VecOut out) const override { out(0) = 2.0 * p_ * std::pow(x(0), 2 * p_ - 1); }
  Mat hessian(VecRef x) const override {
    Mat h(1, 1);
    h(0, 0) = 2.0 * p_ * (2 * p_ - 1) * std::pow(x(0), 2 * p_ - 2);
    return h;
  }
  std::optional<double> lojasiewicz_theta() const override { return 1.0 / (2.0 * p_); }

 private:
  int p_;
};

}  // namespace

ProblemPtr make_diag_quadratic(const Vec& diag, const GaussianNoiseSpec& noise) {
  if (diag.size() == 0) throw std::invalid_argument("diag_quadratic: empty diagonal");
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (!(diag(i) > 0.0) || !std::isfinite(diag(i)))
      throw std::invalid_argument("diag_quadratic: diagonal entries must be finite and > 0");
  return std::make_shared<DiagQuadratic>(diag, noise);
}

ProblemPtr make_double_well(const GaussianNoiseSpec& noise) {
  if (noise.sigma.size() == 0) throw std::invalid_argument("double_well: empty sigma");
  if (noise.sigma.size() > 12) throw std::invalid_argument("double_well: dimension too large to enumerate 3^d critical points");
  return std::make_shared<DoubleWell>(noise);
}

ProblemPtr make_scalar_power(int p, const GaussianNoiseSpec& noise) {
  if (p < 2) throw std::invalid_argument("scalar_power: p must be >= 2");
  if (noise.sigma.size() != 1) throw std::invalid_argument("scalar_power: problem is one-dimensional");
  return std::make_shared<ScalarPower>(p, noise);
}

}  // namespace adamlab
