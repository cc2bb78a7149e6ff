#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "adamlab/discrete.hpp"
#include "adamlab/model.hpp"
#include "adamlab/ode.hpp"

namespace adamlab {

/// Sup-norm deviation between the interpolated discrete process and the ODE
/// over the knot grid {n gamma} of the trajectory.
double sup_norm_deviation(const Trajectory& traj, const OdeSolution& solution);

/// One replica: constant-step Adam for ceil(T/gamma) steps against the ODE
/// with the matched regime constants (integrator step gamma/4).
double sup_deviation(const StochasticProblem& problem, VecRef x0, const ConstantHyper& hyper, double T,
                     std::uint64_t seed);

struct DeviationCurve {
  std::vector<double> gammas;               ///< strictly decreasing
  std::vector<std::vector<double>> errors;  ///< errors[g][replica]
  std::vector<double> medians;
  double T = 0.0;
  std::size_t replicas = 0;

  bool medians_strictly_decreasing() const;
};

/// gamma-sweep at fixed (a, b, eps). Replica r of every gamma draws from
/// Stream(root_seed, r).
DeviationCurve deviation_curve(const StochasticProblem& problem, VecRef x0, double a, double b, double eps,
                               const std::vector<double>& gammas, double T, std::size_t replicas,
                               std::uint64_t root_seed, unsigned threads = 0);

void write_deviation_csv(std::ostream& out, const DeviationCurve& curve);

struct ErgodicEstimate {
  double gamma = 0.0;
  std::size_t n = 0;
  double delta = 0.0;
  double frequency = 0.0;                ///< pooled over replicas and k = 1..n
  std::vector<double> per_replica;
  double median = 0.0;
  std::size_t diverged = 0;
};

/// Fraction of (replica, k) pairs with d(x_k, S) > delta; diverged replicas
/// count every remaining iterate as far from S.
ErgodicEstimate ergodic_frequency(const StochasticProblem& problem, VecRef x0, const ConstantHyper& hyper,
                                  std::size_t n, double delta, std::size_t replicas, std::uint64_t seed,
                                  unsigned threads = 0);

/// `gamma,n,delta,frequency` rows.
void write_ergodic_csv(std::ostream& out, const std::vector<ErgodicEstimate>& rows);

enum class RateMode { power, exponential };

struct RateFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double predicted = 0.0;  ///< theoretical slope, NaN when unknown
  double residual = 0.0;   ///< RMS of the regression residuals
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Least-squares slope of log||x(t) - x*|| against log t (power) or t
/// (exponential) over the window. The prediction is -theta/(1-2theta) for
/// power mode and, for exponential mode, minus the slowest decay rate of the
/// linearised (x, m) block when `params` is supplied.
RateFit fit_rate(const OdeSolution& solution, const StochasticProblem& problem, VecRef x_star, double t_lo,
                 double t_hi, RateMode mode, std::optional<OdeParams> params = std::nullopt);

/// Plain least squares of ys against xs.
RateFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

void write_rate_csv(std::ostream& out, const std::vector<RateFit>& fits);

struct AuditReport {
  double max_violation = 0.0;  ///< max_i value[i+1] - value[i]
  std::optional<std::size_t> first_violation;
  double tol = 0.0;
  bool passed = false;
};

/// Checks that a sampled sequence is non-increasing up to `tol`.
AuditReport monotonicity_audit(const std::vector<double>& values, double tol);

struct ConvergenceCensus {
  std::size_t replicas = 0;
  std::size_t converged = 0;   ///< within tolerance of some (x*, 0, S(x*))
  std::size_t diverged = 0;
  double worst_x_distance = 0.0;
  double worst_m_norm = 0.0;
  double worst_v_gap = 0.0;    ///< ||S(x_n) - v_n||
  double worst_equilibrium_distance = 0.0;  ///< max of dist_to_equilibria(z_n)
  std::vector<std::size_t> basin_counts;  ///< replicas per critical point
};

/// Decreasing-step replicas started uniformly in [-box, box]^d (drawn from
/// each replica's own stream); counts terminal states with d(x_n, S) <=
/// x_tol, ||m_n|| <= mv_tol and ||S(x_n) - v_n|| <= mv_tol.
ConvergenceCensus convergence_census(const StochasticProblem& problem, const Schedule& schedule, std::size_t n_iters,
                                     std::size_t replicas, double box, double x_tol, double mv_tol,
                                     std::uint64_t root_seed, unsigned threads = 0);

}  // namespace adamlab
