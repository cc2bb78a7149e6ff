#include "adamlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace adamlab {

namespace {

double off_diagonal_norm(const Mat& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Mat& input, double tol, int max_sweeps) {
  if (input.rows() != input.cols()) throw std::invalid_argument("jacobi_eigen: matrix not square");
  if (!is_symmetric(input, 1e-10 * std::max(1.0, input.norm())))
    throw std::invalid_argument("jacobi_eigen: matrix not symmetric");

  const Eigen::Index n = input.rows();
  Mat a = symmetrized(input);
  Mat p = Mat::Identity(n, n);
  const double scale = a.norm();
  const double threshold = scale > 0.0 ? tol * scale : tol;

  SymmetricEigen out;
  for (; out.sweeps < max_sweeps && off_diagonal_norm(a) > threshold; ++out.sweeps) {
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      for (Eigen::Index l = k + 1; l < n; ++l) {
        const double akl = a(k, l);
        if (akl == 0.0) continue;
        // Rotation angle annihilating a(k,l); t is the smaller root of
        // t^2 + 2 theta t - 1 = 0.
        const double theta = (a(l, l) - a(k, k)) / (2.0 * akl);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double aik = a(i, k);
          const double ail = a(i, l);
          a(i, k) = c * aik - s * ail;
          a(i, l) = s * aik + c * ail;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double aki = a(k, i);
          const double ali = a(l, i);
          a(k, i) = c * aki - s * ali;
          a(l, i) = s * aki + c * ali;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double pik = p(i, k);
          const double pil = p(i, l);
          p(i, k) = c * pik - s * pil;
          p(i, l) = s * pik + c * pil;
        }
      }
    }
  }
  out.off_diagonal = off_diagonal_norm(a);
  if (out.off_diagonal > threshold)
    throw std::runtime_error("jacobi_eigen: no convergence within sweep budget");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index src = order[static_cast<std::size_t>(c)];
    out.values(c) = a(src, src);
    Vec col = p.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-14) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
    out.vectors.col(c) = col;
  }
  return out;
}

double stability_margin(const Mat& a) {
  Eigen::EigenSolver<Mat> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("stability_margin: eigensolver failed");
  return -solver.eigenvalues().real().maxCoeff();
}

Mat solve_continuous_lyapunov(const Mat& a, const Mat& q) {
  return solve_continuous_lyapunov(a, q, stability_margin(a));
}

Mat solve_continuous_lyapunov(const Mat& a, const Mat& q, double margin) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw std::invalid_argument("solve_continuous_lyapunov: dimension mismatch");
  const double scale = std::max(1.0, a.norm());
  if (!(margin > 1e-12 * scale))
    throw LyapunovError("Lyapunov system singular or unstable: spectral margin " + std::to_string(margin),
                        margin);

  // vec(AX + XA^T) = (I kron A + A kron I) vec(X), column-major vec.
  const Eigen::Index n2 = n * n;
  Mat k = Mat::Zero(n2, n2);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = i + j * n;
      for (Eigen::Index r = 0; r < n; ++r) {
        k(row, r + j * n) += a(i, r);  // (AX)_{ij} = sum_r A_{ir} X_{rj}
        k(row, i + r * n) += a(j, r);  // (XA^T)_{ij} = sum_r X_{ir} A_{jr}
      }
    }
  }
  const Vec rhs = -Eigen::Map<const Vec>(q.data(), n2);
  Eigen::PartialPivLU<Mat> lu(k);
  const Vec sol = lu.solve(rhs);
  Mat x = Eigen::Map<const Mat>(sol.data(), n, n);
  if (!x.allFinite()) throw LyapunovError("Lyapunov solve produced non-finite values", margin);
  return symmetrized(x);
}

double lyapunov_residual(const Mat& a, const Mat& x, const Mat& q) {
  const double r = (a * x + x * a.transpose() + q).norm();
  const double qn = q.norm();
  return qn > 0.0 ? r / qn : r;
}

bool is_symmetric(const Mat& a, double tol) {
  return a.rows() == a.cols() && (a - a.transpose()).cwiseAbs().maxCoeff() <= tol;
}

double relative_difference(const Mat& a, const Mat& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    compensation_ += (sum_ - t) + x;
  else
    compensation_ += (x - t) + sum_;
  sum_ = t;
}

}  // namespace adamlab
