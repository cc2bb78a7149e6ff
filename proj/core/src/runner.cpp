#include "adamlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "adamlab/analysis.hpp"
#include "adamlab/clt.hpp"
#include "adamlab/csv.hpp"
#include "adamlab/discrete.hpp"
#include "adamlab/ode.hpp"
#include "adamlab/rng.hpp"

namespace adamlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, RunResult& result) : dir_(std::move(dir)), result_(result) {}

  template <class Fn>
  void write(const std::string& name, Fn&& fill) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    fill(out);
    if (!out) throw std::runtime_error("write failed for '" + (dir_ / name).string() + "'");
    result_.artifacts.push_back(name);
  }

 private:
  std::filesystem::path dir_;
  RunResult& result_;
};

OdeParams ode_params(const Algorithm& algorithm) {
  if (const auto* h = std::get_if<ConstantHyper>(&algorithm)) return OdeParams::from_hyper(*h);
  const auto& s = std::get<Schedule>(algorithm);
  return {s.a, s.b, s.eps};
}

double max_increase(const std::vector<double>& values) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < values.size(); ++i) worst = std::max(worst, values[i + 1] - values[i]);
  return values.size() < 2 ? 0.0 : worst;
}

double final_distance(const StochasticProblem& problem, VecRef x) {
  return problem.capabilities().has_critical_points ? distance_to_critical_set(problem, x) : kNaN;
}

void run_simulate(const RunConfig& cfg, const SimulateSpec& spec, const StochasticProblem& problem,
                  ArtifactWriter& out, RunResult& res) {
  RunOptions options;
  options.stride = spec.stride;
  options.divergence_radius = spec.divergence_radius;
  const Trajectory traj = run(problem, spec.x0, cfg.algorithm, spec.n_iters, cfg.seed, options);
  out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });

  std::vector<double> costs;
  costs.reserve(traj.size());
  for (const auto& s : traj.states) costs.push_back(problem.value(s.x()));
  res.metrics["final_F"] = costs.back();
  res.metrics["final_dist_to_critical"] = final_distance(problem, traj.states.back().x());
  res.metrics["max_cost_increase"] = max_increase(costs);
}

void run_ode(const RunConfig& cfg, const OdeSpec& spec, const StochasticProblem& problem, ArtifactWriter& out,
             RunResult& res) {
  const OdeParams params = ode_params(cfg.algorithm);
  const OdeSolution sol = integrate(spec.x0, params, problem, spec.t_end, spec.dt, spec.substeps);
  out.write("ode.csv", [&](std::ostream& os) { write_ode_csv(os, sol, params, problem); });

  const double f0 = problem.value(spec.x0);
  double cost_excess = -std::numeric_limits<double>::infinity();
  double min_v = std::numeric_limits<double>::infinity();
  std::vector<double> lyap;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    cost_excess = std::max(cost_excess, problem.value(sol.states[i].x()) - f0);
    min_v = std::min(min_v, sol.states[i].v().minCoeff());
    if (sol.times[i] > 0.0) lyap.push_back(V_eval(sol.times[i], sol.states[i], params, problem));
  }
  res.metrics["max_cost_increase"] = cost_excess;
  res.metrics["V_max_violation"] = max_increase(lyap);
  res.metrics["final_dist_to_equilibria"] =
      problem.capabilities().has_critical_points ? dist_to_equilibria(sol.states.back(), problem) : kNaN;
  res.metrics["min_v"] = min_v;
  res.metrics["max_clamp"] = sol.max_clamp;
  if (sol.clamp_warning) res.notes.push_back("negative v entries beyond dt^2 were projected to zero");
}

void run_deviation(const RunConfig& cfg, const DeviationSpec& spec, const StochasticProblem& problem,
                   ArtifactWriter& out, RunResult& res) {
  const auto& h = std::get<ConstantHyper>(cfg.algorithm);
  const DeviationCurve curve =
      deviation_curve(problem, spec.x0, h.a(), h.b(), h.eps, spec.gammas, spec.T, spec.replicas, cfg.seed, cfg.threads);
  out.write("deviation.csv", [&](std::ostream& os) { write_deviation_csv(os, curve); });
  res.metrics["median_first"] = curve.medians.front();
  res.metrics["median_last"] = curve.medians.back();
  res.metrics["medians_strictly_decreasing"] = curve.medians_strictly_decreasing() ? 1.0 : 0.0;
}

void run_ergodic(const RunConfig& cfg, const ErgodicSpec& spec, const StochasticProblem& problem,
                 ArtifactWriter& out, RunResult& res) {
  const auto& base = std::get<ConstantHyper>(cfg.algorithm);
  std::vector<ErgodicEstimate> rows;
  std::size_t diverged = 0;
  for (double gamma : spec.gammas) {
    const auto hyper = ConstantHyper::from_regime(gamma, base.a(), base.b(), base.eps);
    rows.push_back(ergodic_frequency(problem, spec.x0, hyper, spec.n, spec.delta, spec.replicas, cfg.seed, cfg.threads));
    diverged += rows.back().diverged;
  }
  out.write("ergodic.csv", [&](std::ostream& os) { write_ergodic_csv(os, rows); });
  bool non_increasing = true;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) non_increasing &= rows[i + 1].frequency <= rows[i].frequency;
  res.metrics["frequency_first"] = rows.front().frequency;
  res.metrics["frequency_last"] = rows.back().frequency;
  res.metrics["frequency_non_increasing"] = non_increasing ? 1.0 : 0.0;
  res.metrics["diverged"] = static_cast<double>(diverged);
}

void run_rates(const RunConfig& cfg, const RatesSpec& spec, const StochasticProblem& problem, ArtifactWriter& out,
               RunResult& res) {
  const OdeParams params = ode_params(cfg.algorithm);
  const OdeSolution sol = integrate(spec.x0, params, problem, spec.t_end, spec.dt);
  Vec x_star;
  if (spec.x_star) {
    x_star = *spec.x_star;
  } else {
    // Nearest listed critical point to the final iterate.
    const Vec xT = sol.states.back().x();
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& p : problem.critical_set().points) {
      const double d = (p - xT).norm();
      if (d < best) {
        best = d;
        x_star = p;
      }
    }
  }
  const double t_lo = spec.t_lo.value_or(spec.t_end / 100.0);
  const double t_hi = spec.t_hi.value_or(spec.t_end);
  const RateMode mode = spec.mode == "power" ? RateMode::power : RateMode::exponential;
  const RateFit fit = fit_rate(sol, problem, x_star, t_lo, t_hi, mode, params);
  out.write("ode.csv", [&](std::ostream& os) { write_ode_csv(os, sol, params, problem); });
  out.write("rates.csv", [&](std::ostream& os) { write_rate_csv(os, {fit}); });
  res.metrics["slope"] = fit.slope;
  res.metrics["predicted"] = fit.predicted;
  res.metrics["slope_error"] = std::abs(fit.slope - fit.predicted);
  res.metrics["r_squared"] = fit.r_squared;
  res.metrics["residual"] = fit.residual;
}

void run_clt(const RunConfig& cfg, const CltSpec& spec, const StochasticProblem& problem, ArtifactWriter& out,
             RunResult& res) {
  const auto& schedule = std::get<Schedule>(cfg.algorithm);
  const CltInputs inputs = make_clt_inputs(problem, spec.x_star, schedule);
  CltReport report = clt_report(inputs);
  res.metrics["L"] = report.L;
  res.metrics["zeta"] = report.zeta;
  res.metrics["lyapunov_residual"] = report.residuals.lyapunov;
  res.metrics["block_consistency"] = report.residuals.block_consistency;
  res.metrics["spectral_residual"] = report.residuals.spectral;
  res.metrics["sigma1_empirical_rel_err"] = kNaN;
  res.metrics["retention_rate"] = kNaN;
  res.metrics["mean_max_abs_z"] = kNaN;
  if (spec.monte_carlo) {
    McOptions options;
    options.n_stop = spec.n_stop;
    options.replicas = spec.replicas;
    options.root_seed = cfg.seed;
    options.divergence_radius = spec.divergence_radius;
    options.threads = cfg.threads;
    const Vec x0 = spec.x0.value_or(spec.x_star);
    report.empirical = mc_covariance(problem, spec.x_star, x0, schedule, options);
    const McCovariance& mc = *report.empirical;
    res.metrics["sigma1_empirical_rel_err"] =
        (mc.cov - report.Sigma1_closed).norm() / report.Sigma1_closed.norm();
    res.metrics["retention_rate"] = mc.retention_rate;
    res.metrics["mean_max_abs_z"] = (mc.mean.array().abs() / mc.mean_stderr.array()).maxCoeff();
  }
  out.write("clt.json", [&](std::ostream& os) { os << clt_report_json(report) << '\n'; });
}

void run_audit(const RunConfig& cfg, const AuditSpec& spec, const StochasticProblem& problem, ArtifactWriter& out,
               RunResult& res) {
  const OdeParams params = ode_params(cfg.algorithm);
  const OdeSolution sol = integrate(spec.x0, params, problem, spec.t_end, spec.dt);

  const double f0 = problem.value(spec.x0);
  double cost_excess = -std::numeric_limits<double>::infinity();
  std::vector<double> lyap;
  std::vector<std::size_t> interior;  // grid indices where the centred difference in t fits
  const double fd_step = std::min(1e-6, spec.dt / 4.0);
  for (std::size_t i = 0; i < sol.size(); ++i) {
    cost_excess = std::max(cost_excess, problem.value(sol.states[i].x()) - f0);
    if (sol.times[i] > 0.0) lyap.push_back(V_eval(sol.times[i], sol.states[i], params, problem));
    if (sol.times[i] > fd_step) interior.push_back(i);
  }
  const AuditReport v_audit = monotonicity_audit(lyap, spec.tol);

  std::vector<std::size_t> picks;
  const std::size_t samples = std::min(spec.samples, interior.size());
  for (std::size_t k = 0; k < samples; ++k) {
    const double u = samples == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(samples - 1);
    picks.push_back(interior[static_cast<std::size_t>(std::llround(u * static_cast<double>(interior.size() - 1)))]);
  }
  double excess = -std::numeric_limits<double>::infinity();
  out.write("audit.csv", [&](std::ostream& os) {
    os << "t,V,dVdt_fd,bound\n";
    for (std::size_t i : picks) {
      const double t = sol.times[i];
      const double dv = lyapunov_derivative_fd(t, sol.states[i], params, problem, fd_step);
      const double bound = dissipation_bound(t, sol.states[i], params);
      excess = std::max(excess, dv - bound);
      os << format_float(t) << ',' << format_float(V_eval(t, sol.states[i], params, problem)) << ','
         << format_float(dv) << ',' << format_float(bound) << '\n';
    }
  });

  // W_delta along the autonomous flow from a random start with v > 0.
  Stream stream(cfg.seed, 0);
  const std::size_t d = problem.dim();
  AdamState z0 = AdamState::initial(spec.x0);
  for (std::size_t i = 0; i < d; ++i) {
    z0.m()(static_cast<Eigen::Index>(i)) = stream.gaussian();
    z0.v()(static_cast<Eigen::Index>(i)) = std::abs(stream.gaussian()) + 0.1;
  }
  const OdeSolution flow = integrate_autonomous(z0, params, problem, spec.t_end, spec.dt);
  std::vector<double> w;
  w.reserve(flow.size());
  for (const auto& z : flow.states) w.push_back(W_delta_eval(z, spec.delta, params, problem));
  const AuditReport w_audit = monotonicity_audit(w, spec.tol);

  res.metrics["V_max_violation"] = v_audit.max_violation;
  res.metrics["dissipation_max_excess"] = excess;
  res.metrics["W_max_violation"] = w_audit.max_violation;
  res.metrics["max_cost_increase"] = cost_excess;
  res.notes.push_back("audit tolerances (tol, slack) are engineering choices; the theory gives no decay modulus");
}

}  // namespace

double estimated_work(const RunConfig& cfg) {
  const double d = static_cast<double>(cfg.problem.sigma.size());
  return std::visit(
      [&](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, SimulateSpec>) {
          return d * static_cast<double>(e.n_iters);
        } else if constexpr (std::is_same_v<T, OdeSpec> || std::is_same_v<T, RatesSpec>) {
          return 4.0 * d * e.t_end / e.dt;
        } else if constexpr (std::is_same_v<T, AuditSpec>) {
          return 8.0 * d * e.t_end / e.dt;
        } else if constexpr (std::is_same_v<T, DeviationSpec>) {
          double steps = 0.0;
          for (double g : e.gammas) steps += 5.0 * e.T / g;
          return d * steps * static_cast<double>(e.replicas);
        } else if constexpr (std::is_same_v<T, ErgodicSpec>) {
          return d * static_cast<double>(e.n * e.replicas * e.gammas.size());
        } else {
          return e.monte_carlo ? d * static_cast<double>(e.n_stop) * static_cast<double>(e.replicas) : d * d;
        }
      },
      cfg.experiment);
}

RunResult execute(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream* log) {
  const double work = estimated_work(cfg);
  if (work > max_work())
    throw ConfigError("budget overrun: about " + format_float(work) + " scalar updates requested, limit is " +
                      format_float(max_work()));

  const auto started = std::chrono::steady_clock::now();
  const ProblemPtr problem = cfg.problem.build();
  std::filesystem::create_directories(out_dir);

  RunResult res;
  res.kind = cfg.kind;
  ArtifactWriter out(out_dir, res);
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, SimulateSpec>) run_simulate(cfg, e, *problem, out, res);
        else if constexpr (std::is_same_v<T, OdeSpec>) run_ode(cfg, e, *problem, out, res);
        else if constexpr (std::is_same_v<T, DeviationSpec>) run_deviation(cfg, e, *problem, out, res);
        else if constexpr (std::is_same_v<T, ErgodicSpec>) run_ergodic(cfg, e, *problem, out, res);
        else if constexpr (std::is_same_v<T, RatesSpec>) run_rates(cfg, e, *problem, out, res);
        else if constexpr (std::is_same_v<T, CltSpec>) run_clt(cfg, e, *problem, out, res);
        else run_audit(cfg, e, *problem, out, res);
      },
      cfg.experiment);

  res.passed = true;
  for (const auto& c : cfg.checks) {
    CheckResult r;
    r.name = c.key;
    r.metric = c.metric;
    r.bound = c.bound;
    r.upper = c.upper;
    r.value = res.metrics.count(c.metric) ? res.metrics.at(c.metric) : kNaN;
    // NaN compares false, so a metric that was not computed fails its check.
    r.passed = c.upper ? r.value <= c.bound : r.value >= c.bound;
    res.passed = res.passed && r.passed;
    res.checks.push_back(r);
  }

  nlohmann::ordered_json summary;
  summary["experiment"] = std::string(experiment_name(cfg.kind));
  summary["config"] = cfg.source;
  summary["seed"] = cfg.seed;
  summary["passed"] = res.passed;
  summary["checks"] = nlohmann::ordered_json::array();
  for (const auto& r : res.checks) {
    summary["checks"].push_back({{"name", r.name},
                                 {"metric", r.metric},
                                 {"value", r.value},
                                 {"bound", r.bound},
                                 {"kind", r.upper ? "max" : "min"},
                                 {"passed", r.passed}});
  }
  summary["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : res.metrics) summary["metrics"][k] = v;
  summary["artifacts"] = res.artifacts;
  summary["notes"] = res.notes;
  {
    std::ofstream os(out_dir / "summary.json", std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write summary.json in '" + out_dir.string() + "'");
    os << summary.dump(2) << '\n';
  }
  res.artifacts.push_back("summary.json");

  if (log) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::size_t ok = 0;
    for (const auto& r : res.checks) ok += r.passed ? 1 : 0;
    *log << "adamlab: " << experiment_name(cfg.kind) << " finished in " << fmt::format("{:.2f}", secs) << " s, " << ok << '/'
         << res.checks.size() << " checks passed -> " << out_dir.string() << '\n';
  }
  return res;
}

std::string csv_schemas() {
  return "Artifacts (floats printed with 17 significant digits):\n"
         "  trajectory.csv  n,t,x_0..x_{d-1},m_0..m_{d-1},v_0..v_{d-1}\n"
         "  ode.csv         t,x_0..x_{d-1},m_0..m_{d-1},v_0..v_{d-1},V,F\n"
         "  deviation.csv   gamma,replica,sup_error\n"
         "  ergodic.csv     gamma,n,delta,frequency\n"
         "  rates.csv       t_lo,t_hi,slope,predicted,residual\n"
         "  audit.csv       t,V,dVdt_fd,bound\n"
         "  clt.json        H, Q, L, zeta, Sigma, Sigma1_closed, Sigma1_rmsprop, Sigma1_empirical, retention_rate,\n"
         "                  residuals\n"
         "  summary.json    experiment, config, seed, passed, checks[name,metric,value,bound,kind,passed],\n"
         "                  metrics, artifacts, notes\n";
}

std::string list_experiments(const std::filesystem::path& config_dir) {
  std::ostringstream out;
  out << "Experiments (subcommand: config kind):\n";
  const std::map<ExperimentKind, std::string> blurb{
      {ExperimentKind::simulate, "run Adam and record the trajectory"},
      {ExperimentKind::ode, "integrate the continuous-time system from (x0, 0, 0)"},
      {ExperimentKind::deviation, "sup-norm gap between interpolated iterates and the ODE as gamma shrinks"},
      {ExperimentKind::ergodic, "long-run frequency of iterates farther than delta from the critical set"},
      {ExperimentKind::rates, "fit the convergence rate of the ODE solution"},
      {ExperimentKind::clt, "limiting covariance of the decreasing-step iterates, closed form and Monte Carlo"},
      {ExperimentKind::lyapunov_audit, "monotonicity of V and W_delta and the dissipation inequality"},
  };
  for (ExperimentKind k : all_experiments()) {
    std::string head = "  " + std::string(subcommand_name(k));
    if (subcommand_name(k) != experiment_name(k)) head += " (" + std::string(experiment_name(k)) + ")";
    head.resize(std::max<std::size_t>(head.size() + 1, 28), ' ');
    out << head << blurb.at(k) << '\n';
  }
  out << "\nBundled configs (" << config_dir.string() << "):\n";
  std::vector<std::string> names;
  std::error_code ec;
  if (std::filesystem::is_directory(config_dir, ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(config_dir, ec)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".toml" || ext == ".json")) names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) out << "  (none found)\n";
  for (const auto& n : names) out << "  " << n << '\n';
  out << '\n' << csv_schemas();
  return out.str();
}

}  // namespace adamlab
