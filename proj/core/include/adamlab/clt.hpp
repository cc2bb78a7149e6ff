#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adamlab/discrete.hpp"
#include "adamlab/linalg.hpp"
#include "adamlab/model.hpp"

namespace adamlab {

/// Local data at a critical point x* that determines the limiting Gaussian.
struct CltInputs {
  Vec x_star;
  Mat hess;        ///< Hess F(x*), symmetric positive definite
  Mat jac_S;       ///< Jacobian of S at x*
  Vec S_star;      ///< S(x*) > 0
  Mat grad_cov;    ///< E[grad f grad f^T] at x*
  Mat sq_cov;      ///< Cov(grad f^2) at x*
  Mat cross;       ///< E[grad f (grad f^2 - S)^T] at x*
  double a = 1.0;
  double b = 1.0;
  double eps = 1.0;
  double kappa = 0.7;
  double gamma0 = 0.5;

  std::size_t dim() const { return static_cast<std::size_t>(x_star.size()); }
  void validate() const;
};

/// Assembles CltInputs analytically from a problem exposing its Hessian,
/// Jacobian of S and noise moments.
CltInputs make_clt_inputs(const StochasticProblem& problem, VecRef x_star, const Schedule& schedule);

/// D = diag(1 / (eps + sqrt S_i(x*))).
Vec preconditioner_diag(const CltInputs& in);

/// Spectral decomposition of D^{1/2} Hess D^{1/2} (cyclic Jacobi, sign-normalised).
SymmetricEigen preconditioned_spectrum(const CltInputs& in);

/// zeta = 0 for kappa < 1, 1/(2 gamma0) for kappa = 1.
double zeta_for(double kappa, double gamma0);
inline double zeta_for(const CltInputs& in) { return zeta_for(in.kappa, in.gamma0); }

Mat build_H(const CltInputs& in);
Mat build_Q(const CltInputs& in);

/// (a/2)(1 - sqrt(max(1 - 4 lambda / a, 0))): decay rate contributed by one
/// eigen-direction of the (x, m) block.
double spectral_branch(double a, double lambda);

/// b ^ min_k spectral_branch(a, lambda_k).
double spectral_gap(double a, double b, VecRef lambdas);
double compute_L(const CltInputs& in);

/// Eigenvalues of H from its block structure: -b (d times) and the roots of
/// nu^2 + a nu + a lambda_k for every k.
std::vector<std::complex<double>> h_spectrum(const CltInputs& in);

/// Solves (H + zeta I) Sigma + Sigma (H + zeta I)^T = -Q.
Mat solve_lyapunov(const Mat& H, const Mat& Q, double zeta);

/// Closed-form x-block of Sigma. Requires a > 2 zeta.
Mat sigma1_closed_form(const CltInputs& in);

/// a -> infinity limit: (D Hess - zeta I) S + S (Hess D - zeta I) = D G D.
Mat sigma1_rmsprop_limit(const CltInputs& in);

struct McCovariance {
  Mat cov;              ///< empirical covariance of (x_n - x*) / sqrt(gamma_n)
  Mat cov_stderr;       ///< per-entry standard error
  Vec mean;
  Vec mean_stderr;
  std::size_t replicas = 0;
  std::size_t retained = 0;
  std::size_t diverged = 0;  ///< aborted by the divergence guard or non-finite
  double retention_rate = 0.0;
  double gamma_stop = 0.0;
};

struct McOptions {
  std::size_t n_stop = 100000;
  std::size_t replicas = 10000;
  std::uint64_t root_seed = 1;
  double divergence_radius = 1.0;  ///< retention radius around x*
  unsigned threads = 0;
  std::size_t min_retained = 100;
};

/// Runs independent decreasing-step replicas from x0, retains those ending
/// within the radius of x*, and returns the covariance of the rescaled
/// iterates. Throws if fewer than `min_retained` replicas are kept.
McCovariance mc_covariance(const StochasticProblem& problem, VecRef x_star, VecRef x0, const Schedule& schedule,
                           const McOptions& options);

/// Monte Carlo assembly of Q's noise block from `samples` gradient draws at
/// x*; returns (mean, stderr) per entry of the lower-right 2d x 2d block.
std::pair<Mat, Mat> mc_noise_block(const StochasticProblem& problem, VecRef x_star, double a, double b,
                                   std::size_t samples, std::uint64_t seed);

struct CltResiduals {
  double lyapunov = 0.0;        ///< relative Frobenius residual of the full solve
  double block_consistency = 0.0;  ///< ||Sigma_11 - Sigma1_closed|| / ||Sigma1_closed||
  double spectral = 0.0;        ///< |L - (-max Re h_spectrum)|
  double jacobi_off_diagonal = 0.0;
};

struct CltReport {
  Mat H;
  Mat Q;
  double L = 0.0;
  double zeta = 0.0;
  Mat Sigma;
  Mat Sigma1_closed;
  Mat Sigma1_rmsprop;
  std::optional<McCovariance> empirical;
  CltResiduals residuals;
};

CltReport clt_report(const CltInputs& in);

/// JSON document with fields H, Q, L, zeta, Sigma, Sigma1_closed,
/// Sigma1_rmsprop, Sigma1_empirical, retention_rate, residuals.
std::string clt_report_json(const CltReport& report, int indent = 2);

}  // namespace adamlab
