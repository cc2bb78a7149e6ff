#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "adamlab/types.hpp"

namespace adamlab {

/// Eigen-decomposition A = P diag(values) P^T of a symmetric matrix.
/// Values ascend; each column of P has its first nonzero entry positive.
struct SymmetricEigen {
  Vec values;
  Mat vectors;
  int sweeps = 0;
  double off_diagonal = 0.0;  // Frobenius mass left off the diagonal
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// `tol * ||A||_F` (or absolute `tol` for a zero matrix).
SymmetricEigen jacobi_eigen(const Mat& a, double tol = 1e-12, int max_sweeps = 100);

/// Raised when AX + XA^T = -Q has no unique stable solution.
class LyapunovError : public std::runtime_error {
 public:
  LyapunovError(const std::string& what, double margin)
      : std::runtime_error(what), margin_(margin) {}
  /// -max Re eig(A); zero or negative when the system is singular/unstable.
  double margin() const noexcept { return margin_; }

 private:
  double margin_;
};

/// Solves A X + X A^T = -Q by Kronecker vectorisation and a dense
/// partial-pivoting LU. `stability_margin` is -max Re eig(A); when the
/// caller knows it analytically it can be passed in, otherwise it is
/// computed. Throws LyapunovError unless the margin is positive.
Mat solve_continuous_lyapunov(const Mat& a, const Mat& q);
Mat solve_continuous_lyapunov(const Mat& a, const Mat& q, double stability_margin);

/// -max Re eig(A) for a general square matrix.
double stability_margin(const Mat& a);

/// ||A X + X A^T + Q||_F / ||Q||_F (absolute when Q = 0).
double lyapunov_residual(const Mat& a, const Mat& x, const Mat& q);

inline Mat symmetrized(const Mat& a) { return 0.5 * (a + a.transpose()); }

bool is_symmetric(const Mat& a, double tol = 1e-12);

/// ||A - B||_F / max(||B||_F, tiny).
double relative_difference(const Mat& a, const Mat& b);

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace adamlab
