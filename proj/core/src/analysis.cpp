#include "adamlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adamlab/clt.hpp"
#include "adamlab/csv.hpp"
#include "adamlab/linalg.hpp"
#include "adamlab/parallel.hpp"

namespace adamlab {

namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void require_ode_regime(const ConstantHyper& hyper) {
  hyper.validate();
  if (!hyper.ode_regime_ok()) throw std::invalid_argument("regime mismatch: b > 4a");
}

}  // namespace

double sup_norm_deviation(const Trajectory& traj, const OdeSolution& solution) {
  double worst = 0.0;
  const double t_end = solution.t_end();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] > t_end * (1.0 + 1e-12)) break;
    const AdamState ode = solution.state_at(std::min(traj.times[k], t_end));
    worst = std::max(worst, (traj.states[k].packed() - ode.packed()).norm());
  }
  return worst;
}

namespace {

double replica_deviation(const StochasticProblem& problem, VecRef x0, const ConstantHyper& hyper, double T,
                         const OdeSolution& ode, std::uint64_t root, std::uint64_t index) {
  const auto n = static_cast<std::size_t>(std::ceil(T / hyper.gamma * (1.0 - 1e-12)));
  RunOptions opts;
  opts.stream_index = index;
  const Trajectory traj = run(problem, x0, hyper, n, root, opts);
  return sup_norm_deviation(traj, ode);
}

OdeSolution matched_ode(const StochasticProblem& problem, VecRef x0, const ConstantHyper& hyper, double T) {
  const auto n = static_cast<std::size_t>(std::ceil(T / hyper.gamma * (1.0 - 1e-12)));
  return integrate(x0, OdeParams::from_hyper(hyper), problem, static_cast<double>(n) * hyper.gamma,
                   hyper.gamma / 4.0);
}

}  // namespace

double sup_deviation(const StochasticProblem& problem, VecRef x0, const ConstantHyper& hyper, double T,
                     std::uint64_t seed) {
  require_ode_regime(hyper);
  if (!(T > 0.0)) throw std::invalid_argument("sup_deviation: T must be > 0");
  const OdeSolution ode = matched_ode(problem, x0, hyper, T);
  return replica_deviation(problem, x0, hyper, T, ode, seed, 0);
}

bool DeviationCurve::medians_strictly_decreasing() const {
  for (std::size_t i = 1; i < medians.size(); ++i)
    if (!(medians[i] < medians[i - 1])) return false;
  return !medians.empty();
}

DeviationCurve deviation_curve(const StochasticProblem& problem, VecRef x0, double a, double b, double eps,
                               const std::vector<double>& gammas, double T, std::size_t replicas,
                               std::uint64_t root_seed, unsigned threads) {
  if (gammas.empty() || replicas == 0) throw std::invalid_argument("deviation_curve: empty sweep");
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] < gammas[i - 1])) throw std::invalid_argument("deviation_curve: gammas must strictly decrease");
  if (!(T > 0.0)) throw std::invalid_argument("deviation_curve: T must be > 0");

  DeviationCurve curve;
  curve.gammas = gammas;
  curve.T = T;
  curve.replicas = replicas;
  for (double gamma : gammas) {
    const ConstantHyper hyper = ConstantHyper::from_regime(gamma, a, b, eps);
    require_ode_regime(hyper);
    const OdeSolution ode = matched_ode(problem, x0, hyper, T);
    std::vector<double> errors(replicas);
    parallel_for(replicas, threads, [&](std::size_t r) {
      errors[r] = replica_deviation(problem, x0, hyper, T, ode, root_seed, r);
    });
    curve.medians.push_back(median_of(errors));
    curve.errors.push_back(std::move(errors));
  }
  return curve;
}

void write_deviation_csv(std::ostream& out, const DeviationCurve& curve) {
  out << "gamma,replica,sup_error\n";
  for (std::size_t g = 0; g < curve.gammas.size(); ++g)
    for (std::size_t r = 0; r < curve.errors[g].size(); ++r)
      out << format_float(curve.gammas[g]) << ',' << r << ',' << format_float(curve.errors[g][r]) << '\n';
}

ErgodicEstimate ergodic_frequency(const StochasticProblem& problem, VecRef x0, const ConstantHyper& hyper,
                                  std::size_t n, double delta, std::size_t replicas, std::uint64_t seed,
                                  unsigned threads) {
  hyper.validate();
  if (n == 0 || replicas == 0) throw std::invalid_argument("ergodic_frequency: n and replicas must be >= 1");
  if (!problem.capabilities().has_critical_points)
    throw std::invalid_argument("ergodic_frequency: problem does not expose its critical set");

  std::vector<std::size_t> far(replicas, 0);
  std::vector<char> blew_up(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t r) {
    Stream stream(seed, r);
    std::size_t count = 0;
    const RunOutcome out = drive(problem, x0, hyper, n, stream, 1e8, [&](std::size_t k, double, const AdamState& z) {
      if (k >= 1 && distance_to_critical_set(problem, z.x()) > delta) ++count;
    });
    if (out.status != RunStatus::ok) {
      blew_up[r] = 1;
      count += n - out.iteration + 1;
    }
    far[r] = count;
  });

  ErgodicEstimate est;
  est.gamma = hyper.gamma;
  est.n = n;
  est.delta = delta;
  std::size_t total = 0;
  for (std::size_t r = 0; r < replicas; ++r) {
    total += far[r];
    est.diverged += static_cast<std::size_t>(blew_up[r]);
    est.per_replica.push_back(static_cast<double>(far[r]) / static_cast<double>(n));
  }
  est.frequency = static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(replicas));
  est.median = median_of(est.per_replica);
  return est;
}

void write_ergodic_csv(std::ostream& out, const std::vector<ErgodicEstimate>& rows) {
  out << "gamma,n,delta,frequency\n";
  for (const auto& r : rows)
    out << format_float(r.gamma) << ',' << r.n << ',' << format_float(r.delta) << ',' << format_float(r.frequency)
        << '\n';
}

RateFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("fit_line: need two or more points");
  const double n = static_cast<double>(xs.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx.add(xs[i]);
    sy.add(ys[i]);
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx.add((xs[i] - mx) * (xs[i] - mx));
    sxy.add((xs[i] - mx) * (ys[i] - my));
    syy.add((ys[i] - my) * (ys[i] - my));
  }
  if (sxx.value() <= 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");
  RateFit fit;
  fit.samples = xs.size();
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum sse;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    sse.add(e * e);
  }
  fit.residual = std::sqrt(sse.value() / n);
  fit.r_squared = syy.value() > 0.0 ? 1.0 - sse.value() / syy.value() : 1.0;
  fit.predicted = std::numeric_limits<double>::quiet_NaN();
  return fit;
}

RateFit fit_rate(const OdeSolution& solution, const StochasticProblem& problem, VecRef x_star, double t_lo,
                 double t_hi, RateMode mode, std::optional<OdeParams> params) {
  if (!(t_lo < t_hi) || !(t_lo > 0.0)) throw std::invalid_argument("fit_rate: need 0 < t_lo < t_hi");
  if (t_hi > solution.t_end() * (1.0 + 1e-12)) throw std::invalid_argument("fit_rate: window exceeds trajectory");
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < solution.size(); ++k) {
    const double t = solution.times[k];
    if (t < t_lo || t > t_hi) continue;
    const double dist = (solution.states[k].x() - x_star).norm();
    if (!(dist > 0.0)) throw std::domain_error("fit_rate: zero distance to x* inside the window");
    xs.push_back(mode == RateMode::power ? std::log(t) : t);
    ys.push_back(std::log(dist));
  }
  RateFit fit = fit_line(xs, ys);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  if (mode == RateMode::power) {
    if (const auto theta = problem.lojasiewicz_theta(); theta && *theta < 0.5)
      fit.predicted = -*theta / (1.0 - 2.0 * *theta);
  } else if (params && problem.capabilities().has_hessian) {
    const Vec s = problem.second_moment(x_star);
    const Vec dh = (1.0 / (params->eps + s.array().sqrt())).sqrt().matrix();
    const Mat m = dh.asDiagonal() * problem.hessian(x_star) * dh.asDiagonal();
    const Vec lambdas = jacobi_eigen(symmetrized(m)).values;
    double rate = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lambdas.size(); ++k) rate = std::min(rate, spectral_branch(params->a, lambdas(k)));
    fit.predicted = -rate;
  }
  return fit;
}

void write_rate_csv(std::ostream& out, const std::vector<RateFit>& fits) {
  out << "t_lo,t_hi,slope,predicted,residual\n";
  for (const auto& f : fits)
    out << format_float(f.t_lo) << ',' << format_float(f.t_hi) << ',' << format_float(f.slope) << ','
        << format_float(f.predicted) << ',' << format_float(f.residual) << '\n';
}

AuditReport monotonicity_audit(const std::vector<double>& values, double tol) {
  if (values.size() < 2) throw std::invalid_argument("monotonicity_audit: need at least two samples");
  AuditReport rep;
  rep.tol = tol;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double step = values[i + 1] - values[i];
    rep.max_violation = std::max(rep.max_violation, step);
    if (step > tol && !rep.first_violation) rep.first_violation = i;
  }
  rep.passed = rep.max_violation <= tol;
  return rep;
}

ConvergenceCensus convergence_census(const StochasticProblem& problem, const Schedule& schedule, std::size_t n_iters,
                                     std::size_t replicas, double box, double x_tol, double mv_tol,
                                     std::uint64_t root_seed, unsigned threads) {
  if (replicas == 0 || n_iters == 0) throw std::invalid_argument("convergence_census: empty budget");
  const auto& points = problem.critical_set().points;
  const auto table = tabulate(schedule, n_iters);
  const auto d = static_cast<Eigen::Index>(problem.dim());

  struct Terminal {
    bool ok = false;
    double x_dist = 0.0;
    double m_norm = 0.0;
    double v_gap = 0.0;
    double joint = 0.0;
    std::size_t basin = 0;
  };
  std::vector<Terminal> terminal(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    Stream stream(root_seed, r);
    Vec x0(d);
    for (Eigen::Index i = 0; i < d; ++i) x0(i) = stream.uniform(-box, box);
    const RunOutcome out = drive_tabulated(problem, x0, table, stream, 1e8);
    Terminal& t = terminal[r];
    if (out.status != RunStatus::ok) return;
    t.ok = true;
    t.x_dist = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < points.size(); ++p) {
      const double dist = (out.state.x() - points[p]).norm();
      if (dist < t.x_dist) {
        t.x_dist = dist;
        t.basin = p;
      }
    }
    t.m_norm = out.state.m().norm();
    t.v_gap = (problem.second_moment(out.state.x()) - out.state.v()).norm();
    t.joint = dist_to_equilibria(out.state, problem);
  });

  ConvergenceCensus census;
  census.replicas = replicas;
  census.basin_counts.assign(points.size(), 0);
  for (const Terminal& t : terminal) {
    if (!t.ok) {
      ++census.diverged;
      continue;
    }
    census.worst_x_distance = std::max(census.worst_x_distance, t.x_dist);
    census.worst_m_norm = std::max(census.worst_m_norm, t.m_norm);
    census.worst_v_gap = std::max(census.worst_v_gap, t.v_gap);
    census.worst_equilibrium_distance = std::max(census.worst_equilibrium_distance, t.joint);
    if (t.x_dist <= x_tol && t.m_norm <= mv_tol && t.v_gap <= mv_tol) {
      ++census.converged;
      ++census.basin_counts[t.basin];
    }
  }
  return census;
}

}  // namespace adamlab
