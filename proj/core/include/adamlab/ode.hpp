#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "adamlab/discrete.hpp"
#include "adamlab/model.hpp"

namespace adamlab {

/// Regime constants of the continuous-time system.
struct OdeParams {
  double a = 1.0;
  double b = 1.0;
  double eps = 1.0;

  static OdeParams from_hyper(const ConstantHyper& hyper) { return {hyper.a(), hyper.b(), hyper.eps}; }
  /// Requires a, b, eps > 0 and b <= 4a.
  void validate() const;
};

/// Tangent vectors (xdot, mdot, vdot) share the state layout.
using Tangent = AdamState;

/// Non-autonomous field h(t, z); t must be > 0. Uses |v| under the root.
Tangent h_eval(double t, const AdamState& z, const OdeParams& params, const StochasticProblem& problem);

/// Autonomous limit h_inf(z) = (-m/(eps+sqrt v), a(grad F - m), b(S - v)).
Tangent h_inf_eval(const AdamState& z, const OdeParams& params, const StochasticProblem& problem);

/// U(t, v) = a (1 - e^{-at}) (eps + sqrt(v / (1 - e^{-bt}))), componentwise.
Vec U_eval(double t, VecRef v, const OdeParams& params);
/// U_inf(v) = a (eps + sqrt v).
Vec U_inf_eval(VecRef v, const OdeParams& params);

/// V(t, z) = F(x) + 1/2 sum m_i^2 / U_i(t, v).
double V_eval(double t, const AdamState& z, const OdeParams& params, const StochasticProblem& problem);
double V_inf_eval(const AdamState& z, const OdeParams& params, const StochasticProblem& problem);

/// W_delta(z) = V_inf(z) - delta <grad F(x), m> + delta ||S(x) - v||^2.
double W_delta_eval(const AdamState& z, double delta, const OdeParams& params, const StochasticProblem& problem);

/// Right-derivative at t = 0 of the solution issued from (x0, 0, 0):
/// (-grad F / (eps + sqrt S), a grad F, b S).
Tangent initial_derivative(VecRef x0, const OdeParams& params, const StochasticProblem& problem);

/// d/dt V(t, z(t)) along the flow, by central differences of step `h` in t
/// and along h(t, z).
double lyapunov_derivative_fd(double t, const AdamState& z, const OdeParams& params,
                              const StochasticProblem& problem, double h = 1e-6);

/// -(eps/2) ||a m / U(t, v)||^2, the guaranteed dissipation rate.
double dissipation_bound(double t, const AdamState& z, const OdeParams& params);

struct OdeSolution {
  std::vector<double> times;
  std::vector<AdamState> states;
  double dt = 0.0;
  int order = 4;
  int initial_substeps = 0;   ///< geometric refinements of the first step
  double max_clamp = 0.0;     ///< largest negative v entry projected to zero
  bool clamp_warning = false; ///< max_clamp exceeded dt^2

  std::size_t size() const noexcept { return states.size(); }
  double t_end() const { return times.back(); }
  /// Linear interpolation between grid points.
  AdamState state_at(double t) const;
};

/// RK4 on the grid k*dt from (x0, 0, 0). The first step [0, dt] is split into
/// geometric substeps (dt/2^s, ..., dt/2, dt) and every stage at t = 0 uses
/// initial_derivative.
OdeSolution integrate(VecRef x0, const OdeParams& params, const StochasticProblem& problem, double t_end,
                      double dt, int initial_substeps = 10);

/// RK4 for the autonomous flow z' = h_inf(z) from any z0 with v0 >= 0.
OdeSolution integrate_autonomous(const AdamState& z0, const OdeParams& params, const StochasticProblem& problem,
                                 double t_end, double dt);

/// min over listed critical points x* of ||(x - x*, m, v - S(x*))||.
double dist_to_equilibria(const AdamState& z, const StochasticProblem& problem);

/// `t,x_*,m_*,v_*,V,F`; V at t = 0 is its limit F(x0).
void write_ode_csv(std::ostream& out, const OdeSolution& solution, const OdeParams& params,
                   const StochasticProblem& problem);

}  // namespace adamlab
