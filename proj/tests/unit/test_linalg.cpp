#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "adamlab/linalg.hpp"
#include "adamlab/rng.hpp"

using namespace adamlab;

namespace {

Mat random_matrix(int rows, int cols, Stream& s) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = s.gaussian();
  return m;
}

}  // namespace

TEST_CASE("jacobi on a 2x2 with known spectrum") {
  Mat a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const auto e = jacobi_eigen(a);
  CHECK(e.values(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.values(1) == doctest::Approx(3.0).epsilon(1e-14));
  // first nonzero entry of each column is positive
  CHECK(e.vectors(0, 0) > 0.0);
  CHECK(e.vectors(0, 1) > 0.0);
}

TEST_CASE("jacobi reconstructs random symmetric matrices") {
  Stream s(5, 0);
  for (int d : {1, 2, 5, 12}) {
    const Mat b = random_matrix(d, d, s);
    const Mat a = b + b.transpose();
    const auto e = jacobi_eigen(a);
    const Mat rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((rebuilt - a).norm() <= 1e-11 * a.norm());
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(d, d)).norm() < 1e-12);
    for (int i = 1; i < d; ++i) CHECK(e.values(i - 1) <= e.values(i));
    Eigen::SelfAdjointEigenSolver<Mat> ref(a);
    CHECK((ref.eigenvalues() - e.values).norm() <= 1e-11 * a.norm());
  }
}

TEST_CASE("jacobi leaves a diagonal matrix alone") {
  Vec d(3);
  d << 3.0, -1.0, 2.0;
  const auto e = jacobi_eigen(d.asDiagonal());
  CHECK(e.sweeps <= 1);
  CHECK(e.values(0) == -1.0);
  CHECK(e.values(2) == 3.0);
}

TEST_CASE("scalar lyapunov equation") {
  // -2x = -q  =>  x = q/2 for A = -1
  Mat a(1, 1), q(1, 1);
  a << -1.0;
  q << 3.0;
  CHECK(solve_continuous_lyapunov(a, q)(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("lyapunov solve on random stable systems") {
  Stream s(11, 0);
  for (int d : {2, 4, 8}) {
    const Mat b = random_matrix(d, d, s);
    // shift so that the rightmost eigenvalue sits at -0.5
    const Mat a = b + (stability_margin(b) - 0.5) * Mat::Identity(d, d);
    const Mat c = random_matrix(d, d, s);
    const Mat q = c * c.transpose();
    const Mat x = solve_continuous_lyapunov(a, q);
    CHECK(lyapunov_residual(a, x, q) < 1e-12);
    CHECK(is_symmetric(x));
    // Q positive definite and A stable give X positive definite.
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(x).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("lyapunov solve refuses unstable or singular systems") {
  Mat a = Mat::Identity(2, 2);
  CHECK_THROWS_AS(solve_continuous_lyapunov(a, Mat::Identity(2, 2)), LyapunovError);
  a(0, 0) = 0.0;
  a(1, 1) = -1.0;
  CHECK_THROWS_AS(solve_continuous_lyapunov(a, Mat::Identity(2, 2)), LyapunovError);
}

TEST_CASE("stability margin of a rotation-damping block") {
  Mat a(2, 2);
  a << -0.5, 2.0, -2.0, -0.5;
  CHECK(stability_margin(a) == doctest::Approx(0.5));
}

TEST_CASE("compensated sum keeps small terms next to a large one") {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
}

TEST_CASE("relative difference and symmetry helpers") {
  Mat a(2, 2);
  a << 1.0, 2.0, 2.0 + 1e-9, 1.0;
  CHECK_FALSE(is_symmetric(a));
  CHECK(is_symmetric(symmetrized(a)));
  CHECK(relative_difference(a, a) == 0.0);
}
