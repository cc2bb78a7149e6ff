#include <doctest.h>

#include <algorithm>
#include <Eigen/Eigenvalues>

#include "adamlab/clt.hpp"
#include "adamlab/rng.hpp"

using namespace adamlab;

namespace {

// Worked d = 1 case: F = x^2/2, unit gradient noise, a = 4, b = 1, eps = 1.
CltInputs worked(double kappa = 0.7, double gamma0 = 0.5) {
  const auto p = make_diag_quadratic(Vec::Ones(1), {Vec::Ones(1), false});
  return make_clt_inputs(*p, Vec::Zero(1), Schedule{gamma0, kappa, 4.0, 1.0, 1.0});
}

Mat random_matrix(Eigen::Index r, Eigen::Index c, Stream& s) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = s.gaussian();
  return m;
}

CltInputs random_inputs(Stream& s, Eigen::Index d, bool kappa_one) {
  CltInputs in;
  in.x_star = Vec::Zero(d);
  const Mat b = random_matrix(d, d, s);
  in.hess = b * b.transpose() / static_cast<double>(d) + 0.2 * Mat::Identity(d, d);
  in.jac_S = random_matrix(d, d, s);
  in.S_star = Vec(d);
  for (Eigen::Index i = 0; i < d; ++i) in.S_star(i) = s.uniform(0.3, 3.0);
  const Mat m = random_matrix(2 * d, 2 * d, s);
  const Mat noise = m * m.transpose() / static_cast<double>(2 * d);
  in.grad_cov = noise.topLeftCorner(d, d);
  in.cross = noise.topRightCorner(d, d);
  in.sq_cov = noise.bottomRightCorner(d, d);
  in.a = s.uniform(0.5, 20.0);
  in.b = s.uniform(0.05, 0.99) * 4.0 * in.a;
  in.eps = s.uniform(0.1, 2.0);
  in.kappa = 0.7;
  in.gamma0 = 0.5;
  if (kappa_one) {
    in.kappa = 1.0;
    in.gamma0 = 1.0 / compute_L(in);  // zeta = L/2
  }
  return in;
}

// Largest distance from an eigenvalue in `ours` to its greedily paired partner in `ref`.
double pairing_error(std::vector<std::complex<double>> ours, std::vector<std::complex<double>> ref) {
  double worst = 0.0;
  for (const auto& z : ours) {
    auto best = ref.begin();
    for (auto it = ref.begin(); it != ref.end(); ++it)
      if (std::abs(*it - z) < std::abs(*best - z)) best = it;
    worst = std::max(worst, std::abs(*best - z) / (1.0 + std::abs(z)));
    ref.erase(best);
  }
  return worst;
}

}  // namespace

TEST_CASE("worked example: D = 1/2, lambda = 1/2, Sigma1 = 1/4") {
  const CltInputs in = worked();
  CHECK(preconditioner_diag(in)(0) == doctest::Approx(0.5));
  CHECK(preconditioned_spectrum(in).values(0) == doctest::Approx(0.5));
  CHECK(compute_L(in) == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sigma1_closed_form(in)(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  const Mat sigma = solve_lyapunov(build_H(in), build_Q(in), 0.0);
  CHECK(sigma(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  // RmsProp limit: 2 D h S = D^2 G, S = D G / (2h) = 1/4 as well in d = 1 with zeta = 0.
  CHECK(sigma1_rmsprop_limit(in)(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("scalar closed form with the kappa = 1 shift") {
  // zeta = 1/(2 gamma0) = 1/4; Sigma1 = D^2 G / ((1 - 2 zeta/a)(2 lambda - 2 zeta + 2 zeta^2/a)).
  const CltInputs in = worked(1.0, 2.0);
  const double zeta = 0.25, a = 4.0, lambda = 0.5, dd = 0.5;
  const double expected = dd * dd / ((1.0 - 2.0 * zeta / a) * (2.0 * lambda - 2.0 * zeta + 2.0 * zeta * zeta / a));
  CHECK(zeta_for(in) == 0.25);
  CHECK(sigma1_closed_form(in)(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  const Mat sigma = solve_lyapunov(build_H(in), build_Q(in), zeta);
  CHECK(sigma(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("H and Q block layout") {
  const CltInputs in = worked();
  const Mat h = build_H(in);
  Mat expected(3, 3);
  expected << 0.0, -0.5, 0.0, 4.0, -4.0, 0.0, 0.0, 0.0, -1.0;  // grad S(0) = 0
  CHECK((h - expected).norm() == 0.0);
  const Mat q = build_Q(in);
  CHECK(q.row(0).norm() == 0.0);
  CHECK(q(1, 1) == doctest::Approx(16.0));         // a^2 E[g^2]
  CHECK(q(1, 2) == doctest::Approx(0.0));          // a b E[g (g^2 - S)] = 0 at g = 0
  CHECK(q(2, 2) == doctest::Approx(2.0));          // b^2 Var(g^2) = 2 sigma^4
}

TEST_CASE("closed form, spectrum and full solve agree on random configurations") {
  Stream s(17, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 1 + trial % 5;
    const CltInputs in = random_inputs(s, d, trial % 3 == 0);
    CAPTURE(trial);
    const Mat h = build_H(in);
    const double zeta = zeta_for(in);
    const Mat shifted = h + zeta * Mat::Identity(3 * d, 3 * d);
    const Mat sigma = solve_lyapunov(h, build_Q(in), zeta);
    CHECK(lyapunov_residual(shifted, sigma, build_Q(in)) < 1e-10);
    CHECK(relative_difference(sigma.topLeftCorner(d, d), sigma1_closed_form(in)) < 1e-9);

    Eigen::EigenSolver<Mat> es(h);
    const double max_re = es.eigenvalues().real().maxCoeff();
    CHECK(compute_L(in) == doctest::Approx(-max_re).epsilon(1e-9));

    const auto ours = h_spectrum(in);
    std::vector<std::complex<double>> ref(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    REQUIRE(ours.size() == ref.size());
    CHECK(pairing_error(ours, ref) < 1e-6);
  }
}

TEST_CASE("spectral branch increases with lambda and saturates at a/2") {
  double prev = 0.0;
  for (double lambda = 0.01; lambda < 3.0; lambda += 0.01) {
    const double v = spectral_branch(4.0, lambda);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(spectral_branch(4.0, 1.0) == 2.0);
  CHECK(spectral_branch(4.0, 5.0) == 2.0);
}

TEST_CASE("Sigma1 does not depend on b") {
  Stream s(23, 0);
  for (int trial = 0; trial < 10; ++trial) {
    CltInputs in = random_inputs(s, 3, false);
    in.b = 0.2 * in.a;
    const Mat s1 = sigma1_closed_form(in);
    in.b *= 2.0;
    CHECK((sigma1_closed_form(in) - s1).norm() <= 1e-12 * s1.norm());
  }
}

TEST_CASE("Sigma1 approaches the RmsProp limit like 1/a") {
  Stream s(29, 0);
  CltInputs in = random_inputs(s, 3, false);
  std::vector<double> gaps;
  for (double a : {1e2, 1e3, 1e4}) {
    in.a = a;
    in.b = 1.0;
    gaps.push_back((sigma1_closed_form(in) - sigma1_rmsprop_limit(in)).norm());
  }
  CHECK(gaps[0] / gaps[1] == doctest::Approx(10.0).epsilon(0.05));
  CHECK(gaps[1] / gaps[2] == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("analytic noise block matches sampled moments") {
  const auto p = make_diag_quadratic(Vec::Constant(2, 1.5), {Vec::Constant(2, 0.8), false});
  Vec xs(2);
  xs << 0.3, -0.4;  // not critical, so the cross terms are nonzero
  const Schedule sched{0.5, 0.7, 3.0, 2.0, 1.0};
  CltInputs in;
  in.x_star = xs;
  in.a = sched.a;
  in.b = sched.b;
  const NoiseMoments nm = p->noise_moments(xs);
  Mat block(4, 4);
  block << in.a * in.a * nm.grad_outer, in.a * in.b * nm.cross, in.a * in.b * nm.cross.transpose(),
      in.b * in.b * nm.sq_cov;
  // sampled block is centred at S(x), so its (m, m) part is a^2 E[g g^T]
  const auto [mean, se] = mc_noise_block(*p, xs, in.a, in.b, 400000, 5);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(mean(i, j) - block(i, j)) <= 5.0 * se(i, j) + 1e-12);
}

TEST_CASE("invalid CLT setups are rejected") {
  const auto well = make_double_well({Vec::Ones(1), false});
  CHECK_THROWS_AS(make_clt_inputs(*well, Vec::Zero(1), Schedule{}), std::invalid_argument);
  CHECK_NOTHROW(make_clt_inputs(*well, Vec::Ones(1), Schedule{}));
  // a <= 2 zeta
  CHECK_THROWS_AS(sigma1_closed_form(worked(1.0, 0.1)), std::invalid_argument);
  CHECK(zeta_for(0.7, 0.5) == 0.0);
  CHECK(zeta_for(1.0, 0.5) == 1.0);
}

TEST_CASE("report collects consistent residuals and serialises") {
  const CltReport rep = clt_report(worked());
  CHECK(rep.residuals.lyapunov < 1e-12);
  CHECK(rep.residuals.block_consistency < 1e-12);
  CHECK(rep.residuals.spectral < 1e-12);
  const std::string js = clt_report_json(rep);
  CHECK(js.find("\"Sigma1_closed\"") != std::string::npos);
  CHECK(js.find("\"retention_rate\": null") != std::string::npos);
}

TEST_CASE("small Monte Carlo run lands near the closed form, independent of threads") {
  const auto p = make_diag_quadratic(Vec::Ones(1), {Vec::Ones(1), false});
  const Schedule sched{0.5, 0.7, 4.0, 1.0, 1.0};
  McOptions opt;
  opt.n_stop = 20000;
  opt.replicas = 400;
  opt.root_seed = 77;
  opt.threads = 1;
  const auto one = mc_covariance(*p, Vec::Zero(1), Vec::Constant(1, 0.1), sched, opt);
  opt.threads = 3;
  const auto three = mc_covariance(*p, Vec::Zero(1), Vec::Constant(1, 0.1), sched, opt);
  CHECK(one.cov == three.cov);
  CHECK(one.mean == three.mean);
  CHECK(one.retention_rate == 1.0);
  CHECK(one.cov(0, 0) == doctest::Approx(0.25).epsilon(0.3));
  CHECK(std::abs(one.mean(0)) < 4.0 * one.mean_stderr(0));
}
