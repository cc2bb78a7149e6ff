#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "adamlab/model.hpp"
#include "adamlab/rng.hpp"
#include "adamlab/types.hpp"

namespace adamlab {

/// z = (x, m, v), stored contiguously as one 3d-vector so that states can be
/// added, interpolated and measured as a whole.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t dim) : dim_(static_cast<Eigen::Index>(dim)), data_(Vec::Zero(3 * dim_)) {}
  AdamState(VecRef x, VecRef m, VecRef v);

  /// (x0, 0, 0).
  static AdamState initial(VecRef x0);
  static AdamState from_packed(VecRef packed);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(dim_); }

  auto x() { return data_.segment(0, dim_); }
  auto m() { return data_.segment(dim_, dim_); }
  auto v() { return data_.segment(2 * dim_, dim_); }
  auto x() const { return data_.segment(0, dim_); }
  auto m() const { return data_.segment(dim_, dim_); }
  auto v() const { return data_.segment(2 * dim_, dim_); }

  const Vec& packed() const noexcept { return data_; }
  Vec& packed() noexcept { return data_; }

  bool operator==(const AdamState& other) const { return dim_ == other.dim_ && data_ == other.data_; }

 private:
  Eigen::Index dim_ = 0;
  Vec data_;
};

/// Hyperparameters of constant-stepsize Adam(gamma, alpha, beta, eps).
struct ConstantHyper {
  double gamma = 1e-3;
  double alpha = 0.9;
  double beta = 0.999;
  double eps = 1e-8;

  /// alpha = 1 - a gamma, beta = 1 - b gamma, so the regime constants are exact.
  static ConstantHyper from_regime(double gamma, double a, double b, double eps);

  double a() const noexcept { return (1.0 - alpha) / gamma; }
  double b() const noexcept { return (1.0 - beta) / gamma; }
  /// b <= 4a, required whenever the run is compared against the ODE.
  bool ode_regime_ok() const noexcept { return b() <= 4.0 * a() * (1.0 + 1e-12); }

  void validate() const;
};

/// gamma_n = gamma0 / (n+1)^kappa, alpha_n = clamp(1 - a gamma_n), beta_n = clamp(1 - b gamma_n).
struct Schedule {
  double gamma0 = 0.5;
  double kappa = 0.7;
  double a = 1.0;
  double b = 1.0;
  double eps = 1e-8;

  double gamma(std::size_t n) const { return gamma0 / std::pow(static_cast<double>(n) + 1.0, kappa); }
  double alpha(std::size_t n) const;
  double beta(std::size_t n) const;

  void validate() const;
};

/// Running debiaser r_n = alpha_n r_{n-1} + (1 - alpha_n), r_0 = 0.
struct Debiaser {
  double r = 0.0;
  void push(double decay) noexcept { r = decay * r + (1.0 - decay); }
};

/// Everything one decreasing-step iteration needs.
struct StepCoefficients {
  std::size_t n = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double r = 0.0;
  double rbar = 0.0;
  double eps = 0.0;
};

/// Walks a Schedule forward, maintaining r_n and rbar_n.
class ScheduleCursor {
 public:
  explicit ScheduleCursor(Schedule schedule);

  /// Moves to iteration n+1 and returns its coefficients.
  const StepCoefficients& advance();
  const StepCoefficients& current() const noexcept { return coeffs_; }
  /// Sum of gamma_k for k <= n (the ODE time of iterate n).
  double elapsed() const noexcept { return elapsed_; }

 private:
  Schedule schedule_;
  StepCoefficients coeffs_;
  Debiaser r_;
  Debiaser rbar_;
  double elapsed_ = 0.0;
};

/// In-place Algorithm 1 step. Throws for n == 0.
void adam_update_constant(AdamState& state, std::size_t n, const ConstantHyper& hyper, VecRef grad);
AdamState adam_step_constant(AdamState state, std::size_t n, const ConstantHyper& hyper, VecRef grad);

/// In-place decreasing-step update; throws if r_n or rbar_n is zero.
void adam_update_decreasing(AdamState& state, const StepCoefficients& coeffs, VecRef grad);
AdamState adam_step_decreasing(AdamState state, const StepCoefficients& coeffs, VecRef grad);

using Algorithm = std::variant<ConstantHyper, Schedule>;

double algorithm_eps(const Algorithm& algorithm);

struct RunOptions {
  std::size_t stride = 1;
  double divergence_radius = 1e8;
  std::uint64_t stream_index = 0;  ///< noise drawn from Stream(seed, stream_index)
};

struct Trajectory {
  std::vector<std::size_t> iterations;
  std::vector<double> times;
  std::vector<AdamState> states;
  Algorithm algorithm;
  std::uint64_t seed = 0;
  std::size_t stride = 1;

  std::size_t size() const noexcept { return states.size(); }
};

enum class RunStatus { ok, diverged, non_finite };

struct RunOutcome {
  RunStatus status = RunStatus::ok;
  std::size_t iteration = 0;  ///< last completed iteration (or the failing one)
  double time = 0.0;
  AdamState state;
};

/// Drives Adam for `n_iters` iterations, calling observer(n, t, state) after
/// every iteration (and once with n = 0 for the initial state). Stops early
/// on divergence or a non-finite value and reports it in the outcome.
template <class Observer>
RunOutcome drive(const StochasticProblem& problem, VecRef x0, const Algorithm& algorithm, std::size_t n_iters,
                 Stream& stream, double divergence_radius, Observer&& observer);

/// Coefficients for iterations 1..n_iters, shared read-only across replicas.
std::vector<StepCoefficients> tabulate(const Schedule& schedule, std::size_t n_iters);

/// Decreasing-step run over precomputed coefficients; returns only the
/// terminal outcome. Equivalent to drive() with the originating Schedule.
RunOutcome drive_tabulated(const StochasticProblem& problem, VecRef x0, const std::vector<StepCoefficients>& table,
                           Stream& stream, double divergence_radius);

/// Records a trajectory; deterministic in (problem, x0, algorithm, seed).
/// Throws DivergenceError on divergence or non-finite values.
Trajectory run(const StochasticProblem& problem, VecRef x0, const Algorithm& algorithm, std::size_t n_iters,
               std::uint64_t seed, const RunOptions& options = {});

/// Piecewise-linear interpolated process of a constant-stepsize trajectory.
AdamState interpolate(const Trajectory& traj, double t);

/// z_N with N uniform on {1, ..., n}.
AdamState randomized_iterate(const Trajectory& traj, std::size_t n, Stream& stream);
std::size_t randomized_index(std::size_t n, Stream& stream);

struct ScheduleDiagnostics {
  bool square_summable = false;     ///< kappa in (1/2, 1]
  double sum_gamma = 0.0;           ///< partial sums over the horizon
  double sum_gamma_sq = 0.0;
  bool stability_strict = false;    ///< b < 4a
  double limsup_estimate = 0.0;     ///< sup of the stability expression over the tail of the horizon
  double limsup_bound = 0.0;        ///< 2 (a - b/4)
  bool limsup_ok = false;
  std::optional<bool> gamma0_condition;  ///< gamma0 > 1/(2L), only for kappa = 1 with L supplied

  bool all_ok() const noexcept {
    return square_summable && stability_strict && limsup_ok && gamma0_condition.value_or(true);
  }
};

ScheduleDiagnostics check_schedule(const Schedule& schedule, std::size_t horizon,
                                   std::optional<double> spectral_gap = std::nullopt);

/// `n,t,x_0..,m_0..,v_0..` with 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

// ---------------------------------------------------------------------------

template <class Observer>
RunOutcome drive(const StochasticProblem& problem, VecRef x0, const Algorithm& algorithm, std::size_t n_iters,
                 Stream& stream, double divergence_radius, Observer&& observer) {
  RunOutcome out;
  out.state = AdamState::initial(x0);
  Vec grad(x0.size());
  observer(std::size_t{0}, 0.0, static_cast<const AdamState&>(out.state));

  const auto check = [&](std::size_t n) {
    const double norm = out.state.packed().norm();
    if (!std::isfinite(norm)) {
      out.status = RunStatus::non_finite;
    } else if (norm > divergence_radius) {
      out.status = RunStatus::diverged;
    }
    out.iteration = n;
    return out.status == RunStatus::ok;
  };

  if (const auto* hyper = std::get_if<ConstantHyper>(&algorithm)) {
    for (std::size_t n = 1; n <= n_iters; ++n) {
      problem.sample_gradient(out.state.x(), stream, grad);
      adam_update_constant(out.state, n, *hyper, grad);
      out.time = static_cast<double>(n) * hyper->gamma;
      if (!check(n)) return out;
      observer(n, out.time, static_cast<const AdamState&>(out.state));
    }
  } else {
    ScheduleCursor cursor(std::get<Schedule>(algorithm));
    for (std::size_t n = 1; n <= n_iters; ++n) {
      const StepCoefficients& c = cursor.advance();
      problem.sample_gradient(out.state.x(), stream, grad);
      adam_update_decreasing(out.state, c, grad);
      out.time = cursor.elapsed();
      if (!check(n)) return out;
      observer(n, out.time, static_cast<const AdamState&>(out.state));
    }
  }
  return out;
}

}  // namespace adamlab
