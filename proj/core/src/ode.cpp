#include "adamlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "adamlab/csv.hpp"

namespace adamlab {

namespace {

// 1 - e^{-ct}, accurate for small ct.
double debias_factor(double c, double t) { return -std::expm1(-c * t); }

void require_positive_time(double t, const char* what) {
  if (!(t > 0.0)) throw std::invalid_argument(std::string(what) + ": t must be > 0");
}

template <class Field>
Vec rk4_increment(double t, const Vec& z, double h, Field&& field) {
  const Vec k1 = field(t, z);
  const Vec k2 = field(t + 0.5 * h, Vec(z + 0.5 * h * k1));
  const Vec k3 = field(t + 0.5 * h, Vec(z + 0.5 * h * k2));
  const Vec k4 = field(t + h, Vec(z + h * k3));
  return (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Projects roundoff-negative v entries to zero and returns the largest
// projected magnitude.
double clamp_v(Vec& packed, Eigen::Index d) {
  double worst = 0.0;
  for (Eigen::Index i = 2 * d; i < 3 * d; ++i) {
    if (packed(i) < 0.0) {
      worst = std::max(worst, -packed(i));
      packed(i) = 0.0;
    }
  }
  return worst;
}

void require_finite(const Vec& z, double t) {
  if (!z.allFinite())
    throw DivergenceError("ode: non-finite state at t = " + format_float(t), 0, t);
}

}  // namespace

void OdeParams::validate() const {
  if (!(a > 0.0) || !(b > 0.0) || !(eps > 0.0)) throw std::invalid_argument("ode params: a, b, eps must be > 0");
  if (b > 4.0 * a * (1.0 + 1e-12)) throw std::invalid_argument("ode params: regime requires b <= 4a");
}

Tangent h_eval(double t, const AdamState& z, const OdeParams& p, const StochasticProblem& problem) {
  require_positive_time(t, "h_eval");
  const double dm = debias_factor(p.a, t);
  const double dv = debias_factor(p.b, t);
  Tangent out(z.dim());
  out.x() = -(z.m().array() / dm) / (p.eps + (z.v().array().abs() / dv).sqrt());
  problem.gradient(z.x(), out.m());
  out.m() = p.a * (out.m() - z.m());
  problem.second_moment(z.x(), out.v());
  out.v() = p.b * (out.v() - z.v());
  return out;
}

Tangent h_inf_eval(const AdamState& z, const OdeParams& p, const StochasticProblem& problem) {
  Tangent out(z.dim());
  out.x() = -z.m().array() / (p.eps + z.v().array().abs().sqrt());
  problem.gradient(z.x(), out.m());
  out.m() = p.a * (out.m() - z.m());
  problem.second_moment(z.x(), out.v());
  out.v() = p.b * (out.v() - z.v());
  return out;
}

Vec U_eval(double t, VecRef v, const OdeParams& p) {
  require_positive_time(t, "U_eval");
  const double dm = debias_factor(p.a, t);
  const double dv = debias_factor(p.b, t);
  return (p.a * dm * (p.eps + (v.array().abs() / dv).sqrt())).matrix();
}

Vec U_inf_eval(VecRef v, const OdeParams& p) { return (p.a * (p.eps + v.array().abs().sqrt())).matrix(); }

double V_eval(double t, const AdamState& z, const OdeParams& p, const StochasticProblem& problem) {
  const Vec u = U_eval(t, z.v(), p);
  return problem.value(z.x()) + 0.5 * (z.m().array().square() / u.array()).sum();
}

double V_inf_eval(const AdamState& z, const OdeParams& p, const StochasticProblem& problem) {
  const Vec u = U_inf_eval(z.v(), p);
  return problem.value(z.x()) + 0.5 * (z.m().array().square() / u.array()).sum();
}

double W_delta_eval(const AdamState& z, double delta, const OdeParams& p, const StochasticProblem& problem) {
  if (delta < 0.0) throw std::invalid_argument("W_delta: delta must be >= 0");
  const Vec g = problem.gradient(z.x());
  const Vec s = problem.second_moment(z.x());
  return V_inf_eval(z, p, problem) - delta * g.dot(z.m()) + delta * (s - z.v()).squaredNorm();
}

Tangent initial_derivative(VecRef x0, const OdeParams& p, const StochasticProblem& problem) {
  const Vec g = problem.gradient(x0);
  const Vec s = problem.second_moment(x0);
  Tangent out(static_cast<std::size_t>(x0.size()));
  out.x() = -g.array() / (p.eps + s.array().sqrt());
  out.m() = p.a * g;
  out.v() = p.b * s;
  return out;
}

double lyapunov_derivative_fd(double t, const AdamState& z, const OdeParams& p, const StochasticProblem& problem,
                              double h) {
  if (!(t > h)) throw std::invalid_argument("lyapunov_derivative_fd: t must exceed the difference step");
  const Vec dir = h_eval(t, z, p, problem).packed();
  const AdamState fwd = AdamState::from_packed(z.packed() + h * dir);
  const AdamState bwd = AdamState::from_packed(z.packed() - h * dir);
  return (V_eval(t + h, fwd, p, problem) - V_eval(t - h, bwd, p, problem)) / (2.0 * h);
}

double dissipation_bound(double t, const AdamState& z, const OdeParams& p) {
  const Vec u = U_eval(t, z.v(), p);
  return -(p.eps / 2.0) * ((p.a * z.m().array()) / u.array()).square().sum();
}

AdamState OdeSolution::state_at(double t) const {
  if (times.empty()) throw std::out_of_range("state_at: empty solution");
  if (t < times.front() || t > times.back() * (1.0 + 1e-12)) throw std::out_of_range("state_at: t outside grid");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.end()) return states.back();
  const auto hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  if (w == 0.0) return states[lo];
  return AdamState::from_packed(states[lo].packed() + w * (states[hi].packed() - states[lo].packed()));
}

OdeSolution integrate(VecRef x0, const OdeParams& params, const StochasticProblem& problem, double t_end, double dt,
                      int initial_substeps) {
  params.validate();
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("integrate: t_end must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  if (initial_substeps < 0) throw std::invalid_argument("integrate: initial_substeps must be >= 0");
  if (static_cast<std::size_t>(x0.size()) != problem.dim()) throw std::invalid_argument("integrate: x0 has wrong dimension");

  const auto d = static_cast<Eigen::Index>(x0.size());
  const Vec start_slope = initial_derivative(x0, params, problem).packed();
  const auto field = [&](double t, const Vec& z) -> Vec {
    if (t == 0.0) return start_slope;
    return h_eval(t, AdamState::from_packed(z), params, problem).packed();
  };

  OdeSolution sol;
  sol.dt = dt;
  sol.initial_substeps = initial_substeps;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
  sol.times.reserve(steps + 1);
  sol.states.reserve(steps + 1);

  Vec z = AdamState::initial(x0).packed();
  sol.times.push_back(0.0);
  sol.states.push_back(AdamState::from_packed(z));

  const auto record_clamp = [&](Vec& state) { sol.max_clamp = std::max(sol.max_clamp, clamp_v(state, d)); };

  // Local errors near the origin scale like h^5 / t^2 because of the 1/t
  // coefficients, so intervals starting before tau = 1/min(a, b) are split
  // into uniform substeps of length at most dt sqrt(t / tau).
  const double tau = 1.0 / std::min(params.a, params.b);
  const auto advance = [&](double from, double to) {
    double h_max = dt;
    if (from > 0.0 && from < tau) h_max = dt * std::sqrt(from / tau);
    const auto pieces = from > 0.0 ? static_cast<std::size_t>(std::ceil((to - from) / h_max * (1.0 - 1e-12))) : 1;
    const double h = (to - from) / static_cast<double>(std::max<std::size_t>(pieces, 1));
    double s = from;
    for (std::size_t i = 0; i < std::max<std::size_t>(pieces, 1); ++i) {
      const double s_next = i + 1 == pieces ? to : s + h;
      z += rk4_increment(s, z, s_next - s, field);
      record_clamp(z);
      s = s_next;
    }
  };

  // First step on a geometric sub-grid resolving the 1/t behaviour of the
  // debiasing factors near the origin.
  const double first = std::min(dt, t_end);
  double t = 0.0;
  for (int j = initial_substeps; j >= 0; --j) {
    const double t_next = first * std::ldexp(1.0, -j);
    advance(t, t_next);
    t = t_next;
  }
  require_finite(z, t);
  sol.times.push_back(t);
  sol.states.push_back(AdamState::from_packed(z));

  for (std::size_t k = 2; k <= steps; ++k) {
    const double t_next = std::min(static_cast<double>(k) * dt, t_end);
    advance(t, t_next);
    require_finite(z, t_next);
    t = t_next;
    sol.times.push_back(t);
    sol.states.push_back(AdamState::from_packed(z));
  }
  sol.clamp_warning = sol.max_clamp > dt * dt;
  return sol;
}

OdeSolution integrate_autonomous(const AdamState& z0, const OdeParams& params, const StochasticProblem& problem,
                                 double t_end, double dt) {
  params.validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate_autonomous: t_end must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_autonomous: dt must be > 0");
  if ((z0.v().array() < 0.0).any()) throw std::invalid_argument("integrate_autonomous: v0 must be >= 0");

  const auto d = static_cast<Eigen::Index>(z0.dim());
  const auto field = [&](double, const Vec& z) -> Vec {
    return h_inf_eval(AdamState::from_packed(z), params, problem).packed();
  };
  OdeSolution sol;
  sol.dt = dt;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-12)));
  Vec z = z0.packed();
  double t = 0.0;
  sol.times.push_back(t);
  sol.states.push_back(z0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t_next = std::min(static_cast<double>(k) * dt, t_end);
    z += rk4_increment(t, z, t_next - t, field);
    sol.max_clamp = std::max(sol.max_clamp, clamp_v(z, d));
    require_finite(z, t_next);
    t = t_next;
    sol.times.push_back(t);
    sol.states.push_back(AdamState::from_packed(z));
  }
  sol.clamp_warning = sol.max_clamp > dt * dt;
  return sol;
}

double dist_to_equilibria(const AdamState& z, const StochasticProblem& problem) {
  if (!problem.capabilities().has_critical_points)
    throw std::invalid_argument("dist_to_equilibria: problem does not expose its critical set");
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& xs : problem.critical_set().points) {
    const Vec s = problem.second_moment(xs);
    const double dist2 = (z.x() - xs).squaredNorm() + z.m().squaredNorm() + (z.v() - s).squaredNorm();
    best = std::min(best, std::sqrt(dist2));
  }
  return best;
}

void write_ode_csv(std::ostream& out, const OdeSolution& solution, const OdeParams& params,
                   const StochasticProblem& problem) {
  const std::size_t d = solution.states.empty() ? 0 : solution.states.front().dim();
  out << 't';
  for (const char* block : {"x", "m", "v"})
    for (std::size_t i = 0; i < d; ++i) out << ',' << block << '_' << i;
  out << ",V,F\n";
  for (std::size_t k = 0; k < solution.size(); ++k) {
    const AdamState& z = solution.states[k];
    const double t = solution.times[k];
    const double f = problem.value(z.x());
    const double v = t > 0.0 ? V_eval(t, z, params, problem) : f;
    out << format_float(t);
    for (Eigen::Index i = 0; i < z.packed().size(); ++i) out << ',' << format_float(z.packed()(i));
    out << ',' << format_float(v) << ',' << format_float(f) << '\n';
  }
}

}  // namespace adamlab
