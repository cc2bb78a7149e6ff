#include "adamlab/clt.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "adamlab/parallel.hpp"

namespace adamlab {

void CltInputs::validate() const {
  const auto d = static_cast<Eigen::Index>(dim());
  if (d == 0) throw std::invalid_argument("clt inputs: empty x*");
  const auto square = [d](const Mat& m) { return m.rows() == d && m.cols() == d; };
  if (!square(hess) || !square(jac_S) || !square(grad_cov) || !square(sq_cov) || !square(cross) ||
      S_star.size() != d)
    throw std::invalid_argument("clt inputs: dimension mismatch");
  if (!(a > 0.0) || !(b > 0.0) || !(eps > 0.0)) throw std::invalid_argument("clt inputs: a, b, eps must be > 0");
  if (!(kappa > 0.0 && kappa <= 1.0) || !(gamma0 > 0.0))
    throw std::invalid_argument("clt inputs: kappa must lie in (0, 1] and gamma0 > 0");
  if ((S_star.array() <= 0.0).any()) throw std::invalid_argument("clt inputs: S(x*) must be > 0");
  const double tol = 1e-10 * std::max(1.0, hess.norm());
  if (!is_symmetric(hess, tol)) throw std::invalid_argument("clt inputs: Hessian not symmetric");
  if (jacobi_eigen(hess).values.minCoeff() <= 0.0)
    throw std::invalid_argument("clt inputs: Hessian at x* is not positive definite");
  if (!is_symmetric(grad_cov, 1e-10 * std::max(1.0, grad_cov.norm())))
    throw std::invalid_argument("clt inputs: gradient covariance not symmetric");
  if (jacobi_eigen(grad_cov).values.minCoeff() < -1e-10 * std::max(1.0, grad_cov.norm()))
    throw std::invalid_argument("clt inputs: gradient covariance not positive semidefinite");
}

CltInputs make_clt_inputs(const StochasticProblem& problem, VecRef x_star, const Schedule& schedule) {
  const Capabilities caps = problem.capabilities();
  if (!caps.has_hessian || !caps.has_jacobian_S)
    throw std::invalid_argument("make_clt_inputs: problem lacks Hessian or Jacobian of S");
  CltInputs in;
  in.x_star = x_star;
  in.hess = problem.hessian(x_star);
  in.jac_S = problem.jacobian_S(x_star);
  in.S_star = problem.second_moment(x_star);
  const NoiseMoments nm = problem.noise_moments(x_star);
  in.grad_cov = nm.grad_outer;
  in.sq_cov = nm.sq_cov;
  in.cross = nm.cross;
  in.a = schedule.a;
  in.b = schedule.b;
  in.eps = schedule.eps;
  in.kappa = schedule.kappa;
  in.gamma0 = schedule.gamma0;
  in.validate();
  return in;
}

Vec preconditioner_diag(const CltInputs& in) { return (1.0 / (in.eps + in.S_star.array().sqrt())).matrix(); }

SymmetricEigen preconditioned_spectrum(const CltInputs& in) {
  const Vec dh = preconditioner_diag(in).array().sqrt();
  const Mat m = dh.asDiagonal() * in.hess * dh.asDiagonal();
  return jacobi_eigen(symmetrized(m));
}

double zeta_for(double kappa, double gamma0) { return kappa < 1.0 ? 0.0 : 1.0 / (2.0 * gamma0); }

Mat build_H(const CltInputs& in) {
  in.validate();
  const auto d = static_cast<Eigen::Index>(in.dim());
  Mat h = Mat::Zero(3 * d, 3 * d);
  h.block(0, d, d, d) = -Mat(preconditioner_diag(in).asDiagonal());
  h.block(d, 0, d, d) = in.a * in.hess;
  h.block(d, d, d, d) = -in.a * Mat::Identity(d, d);
  h.block(2 * d, 0, d, d) = in.b * in.jac_S;
  h.block(2 * d, 2 * d, d, d) = -in.b * Mat::Identity(d, d);
  return h;
}

Mat build_Q(const CltInputs& in) {
  in.validate();
  const auto d = static_cast<Eigen::Index>(in.dim());
  Mat q = Mat::Zero(3 * d, 3 * d);
  q.block(d, d, d, d) = in.a * in.a * in.grad_cov;
  q.block(d, 2 * d, d, d) = in.a * in.b * in.cross;
  q.block(2 * d, d, d, d) = in.a * in.b * in.cross.transpose();
  q.block(2 * d, 2 * d, d, d) = in.b * in.b * in.sq_cov;
  return symmetrized(q);
}

double spectral_branch(double a, double lambda) {
  return 0.5 * a * (1.0 - std::sqrt(std::max(1.0 - 4.0 * lambda / a, 0.0)));
}

double spectral_gap(double a, double b, VecRef lambdas) {
  double gap = b;
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) gap = std::min(gap, spectral_branch(a, lambdas(k)));
  return gap;
}

double compute_L(const CltInputs& in) {
  in.validate();
  return spectral_gap(in.a, in.b, preconditioned_spectrum(in).values);
}

std::vector<std::complex<double>> h_spectrum(const CltInputs& in) {
  const Vec lambdas = preconditioned_spectrum(in).values;
  std::vector<std::complex<double>> out;
  out.reserve(3 * in.dim());
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    // nu^2 + a nu + a lambda = 0
    const double disc = in.a * in.a - 4.0 * in.a * lambdas(k);
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      // Stable pair: the larger-magnitude root first, the other via Vieta.
      const double big = -0.5 * (in.a + root);
      out.emplace_back(big, 0.0);
      out.emplace_back(in.a * lambdas(k) / big, 0.0);
    } else {
      const double im = 0.5 * std::sqrt(-disc);
      out.emplace_back(-0.5 * in.a, im);
      out.emplace_back(-0.5 * in.a, -im);
    }
  }
  for (std::size_t k = 0; k < in.dim(); ++k) out.emplace_back(-in.b, 0.0);
  return out;
}

Mat solve_lyapunov(const Mat& H, const Mat& Q, double zeta) {
  const Mat a = H + zeta * Mat::Identity(H.rows(), H.cols());
  return solve_continuous_lyapunov(a, Q);
}

Mat sigma1_closed_form(const CltInputs& in) {
  in.validate();
  const double zeta = zeta_for(in);
  if (!(in.a > 2.0 * zeta)) throw std::invalid_argument("sigma1_closed_form: requires a > 2 zeta");
  const SymmetricEigen spec = preconditioned_spectrum(in);
  const Vec dh = preconditioner_diag(in).array().sqrt();
  const Mat& p = spec.vectors;
  const Vec& lam = spec.values;
  const Mat c = p.transpose() * dh.asDiagonal() * in.grad_cov * dh.asDiagonal() * p;
  const auto d = static_cast<Eigen::Index>(in.dim());
  Mat inner(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = 0; l < d; ++l) {
      const double diff = lam(k) - lam(l);
      const double denom = (1.0 - 2.0 * zeta / in.a) * (lam(k) + lam(l) - 2.0 * zeta + 2.0 * zeta * zeta / in.a) +
                           diff * diff / (2.0 * (in.a - 2.0 * zeta));
      inner(k, l) = c(k, l) / denom;
    }
  }
  return symmetrized(dh.asDiagonal() * p * inner * p.transpose() * dh.asDiagonal());
}

Mat sigma1_rmsprop_limit(const CltInputs& in) {
  in.validate();
  const double zeta = zeta_for(in);
  const auto d = static_cast<Eigen::Index>(in.dim());
  const Vec dd = preconditioner_diag(in);
  const Mat a = -(dd.asDiagonal() * in.hess - zeta * Mat::Identity(d, d));
  const Mat rhs = dd.asDiagonal() * in.grad_cov * dd.asDiagonal();
  return solve_continuous_lyapunov(a, rhs);
}

McCovariance mc_covariance(const StochasticProblem& problem, VecRef x_star, VecRef x0, const Schedule& schedule,
                           const McOptions& opt) {
  if (opt.n_stop == 0 || opt.replicas == 0) throw std::invalid_argument("mc_covariance: n_stop and replicas must be >= 1");
  if (x_star.size() != x0.size() || static_cast<std::size_t>(x0.size()) != problem.dim())
    throw std::invalid_argument("mc_covariance: dimension mismatch");
  const auto table = tabulate(schedule, opt.n_stop);
  const double gamma_stop = table.back().gamma;
  const double scale = 1.0 / std::sqrt(gamma_stop);
  const auto d = static_cast<Eigen::Index>(x0.size());

  Mat rescaled(d, static_cast<Eigen::Index>(opt.replicas));
  std::vector<char> kept(opt.replicas, 0);
  std::vector<char> blew_up(opt.replicas, 0);
  parallel_for(opt.replicas, opt.threads, [&](std::size_t r) {
    Stream stream(opt.root_seed, r);
    const RunOutcome out = drive_tabulated(problem, x0, table, stream, 1e8);
    if (out.status != RunStatus::ok) {
      blew_up[r] = 1;
      return;
    }
    const Vec dev = out.state.x() - x_star;
    if (dev.norm() <= opt.divergence_radius) {
      kept[r] = 1;
      rescaled.col(static_cast<Eigen::Index>(r)) = dev * scale;
    }
  });

  McCovariance res;
  res.replicas = opt.replicas;
  res.gamma_stop = gamma_stop;
  std::vector<Eigen::Index> idx;
  for (std::size_t r = 0; r < opt.replicas; ++r) {
    res.diverged += static_cast<std::size_t>(blew_up[r]);
    if (kept[r]) idx.push_back(static_cast<Eigen::Index>(r));
  }
  res.retained = idx.size();
  res.retention_rate = static_cast<double>(res.retained) / static_cast<double>(opt.replicas);
  if (res.retained < std::max<std::size_t>(opt.min_retained, 2))
    throw std::runtime_error("mc_covariance: only " + std::to_string(res.retained) + " replicas retained");

  const double n = static_cast<double>(res.retained);
  res.mean.resize(d);
  res.mean_stderr.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    CompensatedSum s;
    for (Eigen::Index r : idx) s.add(rescaled(i, r));
    res.mean(i) = s.value() / n;
  }
  res.cov.resize(d, d);
  res.cov_stderr.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      CompensatedSum s;
      for (Eigen::Index r : idx) s.add((rescaled(i, r) - res.mean(i)) * (rescaled(j, r) - res.mean(j)));
      const double c = s.value() / (n - 1.0);
      CompensatedSum dev2;
      for (Eigen::Index r : idx) {
        const double w = (rescaled(i, r) - res.mean(i)) * (rescaled(j, r) - res.mean(j)) - c;
        dev2.add(w * w);
      }
      const double se = std::sqrt(dev2.value() / (n - 1.0) / n);
      res.cov(i, j) = res.cov(j, i) = c;
      res.cov_stderr(i, j) = res.cov_stderr(j, i) = se;
    }
    res.mean_stderr(i) = std::sqrt(res.cov(i, i) / n);
  }
  return res;
}

std::pair<Mat, Mat> mc_noise_block(const StochasticProblem& problem, VecRef x_star, double a, double b,
                                   std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("mc_noise_block: need at least two samples");
  const auto d = static_cast<Eigen::Index>(x_star.size());
  const Vec s_star = problem.second_moment(x_star);
  Stream stream(seed, 0);
  Vec g(d), u(2 * d);
  Mat sum = Mat::Zero(2 * d, 2 * d);
  Mat sum_sq = Mat::Zero(2 * d, 2 * d);
  for (std::size_t k = 0; k < samples; ++k) {
    problem.sample_gradient(x_star, stream, g);
    u.head(d) = a * g;
    u.tail(d) = b * (g.array().square() - s_star.array()).matrix();
    const Mat outer = u * u.transpose();
    sum += outer;
    sum_sq += outer.cwiseProduct(outer);
  }
  const double n = static_cast<double>(samples);
  const Mat mean = sum / n;
  const Mat var = (sum_sq / n - mean.cwiseProduct(mean)) * (n / (n - 1.0));
  return {mean, (var.array().max(0.0) / n).sqrt().matrix()};
}

CltReport clt_report(const CltInputs& in) {
  in.validate();
  CltReport rep;
  rep.H = build_H(in);
  rep.Q = build_Q(in);
  rep.zeta = zeta_for(in);
  const SymmetricEigen spec = preconditioned_spectrum(in);
  rep.L = spectral_gap(in.a, in.b, spec.values);
  rep.residuals.jacobi_off_diagonal = spec.off_diagonal;

  double max_re = -std::numeric_limits<double>::infinity();
  for (const auto& ev : h_spectrum(in)) max_re = std::max(max_re, ev.real());
  rep.residuals.spectral = std::abs(rep.L + max_re);

  const Mat shifted = rep.H + rep.zeta * Mat::Identity(rep.H.rows(), rep.H.cols());
  rep.Sigma = solve_continuous_lyapunov(shifted, rep.Q, rep.L - rep.zeta);
  rep.residuals.lyapunov = lyapunov_residual(shifted, rep.Sigma, rep.Q);
  rep.Sigma1_closed = sigma1_closed_form(in);
  rep.Sigma1_rmsprop = sigma1_rmsprop_limit(in);
  const auto d = static_cast<Eigen::Index>(in.dim());
  rep.residuals.block_consistency = relative_difference(rep.Sigma.topLeftCorner(d, d), rep.Sigma1_closed);
  return rep;
}

namespace {

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string clt_report_json(const CltReport& rep, int indent) {
  nlohmann::json j;
  j["H"] = matrix_json(rep.H);
  j["Q"] = matrix_json(rep.Q);
  j["L"] = rep.L;
  j["zeta"] = rep.zeta;
  j["Sigma"] = matrix_json(rep.Sigma);
  j["Sigma1_closed"] = matrix_json(rep.Sigma1_closed);
  j["Sigma1_rmsprop"] = matrix_json(rep.Sigma1_rmsprop);
  if (rep.empirical) {
    j["Sigma1_empirical"] = matrix_json(rep.empirical->cov);
    j["Sigma1_empirical_stderr"] = matrix_json(rep.empirical->cov_stderr);
    j["retention_rate"] = rep.empirical->retention_rate;
  } else {
    j["Sigma1_empirical"] = nullptr;
    j["retention_rate"] = nullptr;
  }
  j["residuals"] = {{"lyapunov", rep.residuals.lyapunov},
                    {"block_consistency", rep.residuals.block_consistency},
                    {"spectral", rep.residuals.spectral},
                    {"jacobi_off_diagonal", rep.residuals.jacobi_off_diagonal}};
  return j.dump(indent);
}

}  // namespace adamlab
