#include "adamlab/discrete.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "adamlab/csv.hpp"
#include "adamlab/linalg.hpp"

namespace adamlab {

AdamState::AdamState(VecRef x, VecRef m, VecRef v) : AdamState(static_cast<std::size_t>(x.size())) {
  if (m.size() != x.size() || v.size() != x.size()) throw std::invalid_argument("AdamState: block sizes differ");
  this->x() = x;
  this->m() = m;
  this->v() = v;
}

AdamState AdamState::initial(VecRef x0) {
  AdamState s(static_cast<std::size_t>(x0.size()));
  s.x() = x0;
  return s;
}

AdamState AdamState::from_packed(VecRef packed) {
  if (packed.size() % 3 != 0) throw std::invalid_argument("AdamState: packed size not a multiple of 3");
  AdamState s(static_cast<std::size_t>(packed.size() / 3));
  s.data_ = packed;
  return s;
}

ConstantHyper ConstantHyper::from_regime(double gamma, double a, double b, double eps) {
  ConstantHyper h{gamma, 1.0 - a * gamma, 1.0 - b * gamma, eps};
  h.validate();
  return h;
}

void ConstantHyper::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be > 0");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

double Schedule::alpha(std::size_t n) const { return std::clamp(1.0 - a * gamma(n), 0.0, 1.0); }
double Schedule::beta(std::size_t n) const { return std::clamp(1.0 - b * gamma(n), 0.0, 1.0); }

void Schedule::validate() const {
  if (!(gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be > 0");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("a and b must be > 0");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

ScheduleCursor::ScheduleCursor(Schedule schedule) : schedule_(schedule) {
  schedule_.validate();
  coeffs_.eps = schedule_.eps;
}

const StepCoefficients& ScheduleCursor::advance() {
  const std::size_t n = coeffs_.n + 1;
  coeffs_.n = n;
  coeffs_.gamma = schedule_.gamma(n);
  coeffs_.alpha = schedule_.alpha(n);
  coeffs_.beta = schedule_.beta(n);
  r_.push(coeffs_.alpha);
  rbar_.push(coeffs_.beta);
  coeffs_.r = r_.r;
  coeffs_.rbar = rbar_.r;
  elapsed_ += coeffs_.gamma;
  return coeffs_;
}

void adam_update_constant(AdamState& state, std::size_t n, const ConstantHyper& hyper, VecRef grad) {
  if (n == 0) throw std::invalid_argument("adam step: iteration index must be >= 1");
  const double nd = static_cast<double>(n);
  const double m_debias = 1.0 - std::pow(hyper.alpha, nd);
  const double v_debias = 1.0 - std::pow(hyper.beta, nd);
  auto x = state.x();
  auto m = state.m();
  auto v = state.v();
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double g = grad(i);
    m(i) = hyper.alpha * m(i) + (1.0 - hyper.alpha) * g;
    v(i) = hyper.beta * v(i) + (1.0 - hyper.beta) * g * g;
    const double m_hat = m(i) / m_debias;
    const double v_hat = v(i) / v_debias;
    x(i) -= hyper.gamma * m_hat / (hyper.eps + std::sqrt(v_hat));
  }
}

AdamState adam_step_constant(AdamState state, std::size_t n, const ConstantHyper& hyper, VecRef grad) {
  adam_update_constant(state, n, hyper, grad);
  return state;
}

void adam_update_decreasing(AdamState& state, const StepCoefficients& c, VecRef grad) {
  if (c.n == 0) throw std::invalid_argument("adam step: iteration index must be >= 1");
  if (!(c.r > 0.0) || !(c.rbar > 0.0))
    throw std::invalid_argument("schedule configuration: debiaser is zero (every decay factor so far equals 1)");
  auto x = state.x();
  auto m = state.m();
  auto v = state.v();
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    const double g = grad(i);
    m(i) = c.alpha * m(i) + (1.0 - c.alpha) * g;
    v(i) = c.beta * v(i) + (1.0 - c.beta) * g * g;
    const double m_hat = m(i) / c.r;
    const double v_hat = v(i) / c.rbar;
    x(i) -= c.gamma * m_hat / (c.eps + std::sqrt(v_hat));
  }
}

AdamState adam_step_decreasing(AdamState state, const StepCoefficients& coeffs, VecRef grad) {
  adam_update_decreasing(state, coeffs, grad);
  return state;
}

std::vector<StepCoefficients> tabulate(const Schedule& schedule, std::size_t n_iters) {
  ScheduleCursor cursor(schedule);
  std::vector<StepCoefficients> table;
  table.reserve(n_iters);
  for (std::size_t n = 1; n <= n_iters; ++n) table.push_back(cursor.advance());
  return table;
}

RunOutcome drive_tabulated(const StochasticProblem& problem, VecRef x0, const std::vector<StepCoefficients>& table,
                           Stream& stream, double divergence_radius) {
  RunOutcome out;
  out.state = AdamState::initial(x0);
  Vec grad(x0.size());
  for (const StepCoefficients& c : table) {
    problem.sample_gradient(out.state.x(), stream, grad);
    adam_update_decreasing(out.state, c, grad);
    out.iteration = c.n;
    out.time += c.gamma;
    const double norm = out.state.packed().norm();
    if (!std::isfinite(norm)) {
      out.status = RunStatus::non_finite;
      return out;
    }
    if (norm > divergence_radius) {
      out.status = RunStatus::diverged;
      return out;
    }
  }
  return out;
}

double algorithm_eps(const Algorithm& algorithm) {
  return std::visit([](const auto& a) { return a.eps; }, algorithm);
}

Trajectory run(const StochasticProblem& problem, VecRef x0, const Algorithm& algorithm, std::size_t n_iters,
               std::uint64_t seed, const RunOptions& options) {
  if (n_iters == 0) throw std::invalid_argument("run: n_iters must be >= 1");
  if (options.stride == 0) throw std::invalid_argument("run: stride must be >= 1");
  if (static_cast<std::size_t>(x0.size()) != problem.dim()) throw std::invalid_argument("run: x0 has wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("run: x0 must be finite");
  std::visit([](const auto& a) { a.validate(); }, algorithm);

  Trajectory traj;
  traj.algorithm = algorithm;
  traj.seed = seed;
  traj.stride = options.stride;
  const std::size_t expected = n_iters / options.stride + 2;
  traj.iterations.reserve(expected);
  traj.times.reserve(expected);
  traj.states.reserve(expected);

  Stream stream(seed, options.stream_index);
  const RunOutcome outcome = drive(problem, x0, algorithm, n_iters, stream, options.divergence_radius,
                                   [&](std::size_t n, double t, const AdamState& z) {
                                     if (n % options.stride != 0 && n != n_iters) return;
                                     traj.iterations.push_back(n);
                                     traj.times.push_back(t);
                                     traj.states.push_back(z);
                                   });
  if (outcome.status == RunStatus::non_finite)
    throw DivergenceError("run: non-finite iterate at iteration " + std::to_string(outcome.iteration),
                          outcome.iteration, outcome.time);
  if (outcome.status == RunStatus::diverged)
    throw DivergenceError("run: iterate norm exceeded " + format_float(options.divergence_radius) +
                              " at iteration " + std::to_string(outcome.iteration),
                          outcome.iteration, outcome.time);
  return traj;
}

AdamState interpolate(const Trajectory& traj, double t) {
  const auto* hyper = std::get_if<ConstantHyper>(&traj.algorithm);
  if (hyper == nullptr) throw std::invalid_argument("interpolate: trajectory is not constant-stepsize");
  if (traj.stride != 1) throw std::invalid_argument("interpolate: trajectory must be unthinned (stride 1)");
  if (traj.states.empty()) throw std::invalid_argument("interpolate: empty trajectory");
  const double t_last = traj.times.back();
  if (!(t >= 0.0) || t > t_last * (1.0 + 1e-14)) throw std::out_of_range("interpolate: t outside [0, last time]");

  const double gamma = hyper->gamma;
  const std::size_t last = traj.states.size() - 1;
  const double u = t / gamma;
  // t = n * gamma in decimal often lands a hair below n after division.
  const double nearest = std::round(u);
  if (std::abs(u - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    const auto n = static_cast<std::size_t>(nearest);
    return traj.states[std::min(n, last)];
  }
  const auto n = static_cast<std::size_t>(std::floor(u));
  if (n >= last) return traj.states[last];
  const double w = u - static_cast<double>(n);
  return AdamState::from_packed(traj.states[n].packed() + (traj.states[n + 1].packed() - traj.states[n].packed()) * w);
}

std::size_t randomized_index(std::size_t n, Stream& stream) {
  if (n == 0) throw std::invalid_argument("randomized_iterate: n must be >= 1");
  return static_cast<std::size_t>(stream.uniform_index(1, n));
}

AdamState randomized_iterate(const Trajectory& traj, std::size_t n, Stream& stream) {
  if (n == 0) throw std::invalid_argument("randomized_iterate: n must be >= 1");
  if (traj.stride != 1 || traj.states.size() <= n)
    throw std::invalid_argument("randomized_iterate: trajectory must hold iterates 0..n unthinned");
  return traj.states[randomized_index(n, stream)];
}

ScheduleDiagnostics check_schedule(const Schedule& s, std::size_t horizon, std::optional<double> spectral_gap) {
  ScheduleDiagnostics d;
  d.square_summable = s.kappa > 0.5 && s.kappa <= 1.0;
  d.stability_strict = s.b < 4.0 * s.a;
  d.limsup_bound = 2.0 * (s.a - s.b / 4.0);

  CompensatedSum sum, sum_sq;
  for (std::size_t n = 1; n <= horizon; ++n) {
    const double g = s.gamma(n);
    sum.add(g);
    sum_sq.add(g * g);
  }
  d.sum_gamma = sum.value();
  d.sum_gamma_sq = sum_sq.value();

  // 1/gamma_n - ((1 - alpha_{n+2}) / (1 - alpha_{n+1})) / gamma_{n+1}; the
  // limsup is estimated by the supremum over the second half of the horizon.
  d.limsup_estimate = -std::numeric_limits<double>::infinity();
  const std::size_t start = std::max<std::size_t>(1, horizon / 2);
  for (std::size_t n = start; n <= horizon; ++n) {
    const double num = 1.0 - s.alpha(n + 2);
    const double den = 1.0 - s.alpha(n + 1);
    if (den <= 0.0) continue;
    const double value = 1.0 / s.gamma(n) - (num / den) / s.gamma(n + 1);
    d.limsup_estimate = std::max(d.limsup_estimate, value);
  }
  d.limsup_ok = d.limsup_estimate < d.limsup_bound;
  if (s.kappa == 1.0 && spectral_gap) d.gamma0_condition = s.gamma0 > 1.0 / (2.0 * *spectral_gap);
  return d;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t d = traj.states.empty() ? 0 : traj.states.front().dim();
  out << "n,t";
  for (const char* block : {"x", "m", "v"})
    for (std::size_t i = 0; i < d; ++i) out << ',' << block << '_' << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << traj.iterations[k] << ',' << format_float(traj.times[k]);
    const Vec& z = traj.states[k].packed();
    for (Eigen::Index i = 0; i < z.size(); ++i) out << ',' << format_float(z(i));
    out << '\n';
  }
}

}  // namespace adamlab
