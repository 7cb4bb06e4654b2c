#include "doctest.h"
#include "levybel/drift.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace levybel;

namespace {

Mat fd_jacobian(const DriftModel& b, const Vec& x, double h = 1e-6) {
  const int d = static_cast<int>(x.size());
  Mat J(d, d);
  for (int k = 0; k < d; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = (b.value(xp) - b.value(xm)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("shipped matrix is stable") {
  for (int d = 1; d <= kMaxDim; ++d) {
    const Eigen::MatrixXd B = shipped_drift_matrix(d);
    CHECK(Eigen::EigenSolver<Eigen::MatrixXd>(B).eigenvalues().real().maxCoeff() < 0.0);
  }
}

TEST_CASE("jacobians of every drift match finite differences") {
  Vec x(3);
  x << 0.4, -1.3, 2.2;
  Vec v(3);
  v << 0.3, 0.7, -0.2;
  for (const char* id : {"zero", "linear", "tanh"}) {
    const auto b = make_drift(id, 3);
    CHECK(b->jacobian(x).isApprox(fd_jacobian(*b, x), 1e-8));
    // directional second derivative against differences of the jacobian
    const double h = 1e-6;
    const Mat fd = (b->jacobian(x + h * v) - b->jacobian(x - h * v)) / (2 * h);
    CHECK((b->jacobian_directional(x, v) - fd).norm() < 1e-8);
    const auto H = b->hessian(x);
    Mat contracted = Mat::Zero(3, 3);
    for (int k = 0; k < 3; ++k) contracted += v[k] * H[static_cast<std::size_t>(k)];
    CHECK((contracted - b->jacobian_directional(x, v)).norm() < 1e-12);
  }
}

TEST_CASE("linearize agrees with the separate calls, value bitwise") {
  Vec x(2);
  x << 0.3, -25.0;
  Mat V(2, 2);
  V << 1.0, 0.2, -0.5, 3.0;
  for (const char* id : {"linear", "tanh"}) {
    const auto b = make_drift(id, 2);
    Vec val;
    Mat jac;
    Mat dir[2];
    b->linearize(x, V, val, jac, dir);
    CHECK(val == b->value(x));
    CHECK(jac.isApprox(b->jacobian(x), 1e-15));
    for (int k = 0; k < 2; ++k) CHECK((dir[k] - b->jacobian_directional(x, V.col(k))).norm() < 1e-15);
  }
}

TEST_CASE("tanh drift value") {
  Vec x(2);
  x << 0.5, -3.0;
  const auto b = make_drift("tanh", 2);
  Vec th(2);
  th << std::tanh(0.5), std::tanh(-3.0);
  CHECK((b->value(x) - shipped_drift_matrix(2) * th).norm() < 1e-15);
}

TEST_CASE("drift registry errors") {
  CHECK_THROWS_AS(make_drift("cubic", 2), ConfigError);
  CHECK_THROWS_AS(make_drift("tanh", 0), ConfigError);
  CHECK_THROWS_AS(make_drift("tanh", 2, Mat::Identity(3, 3)), ConfigError);
  CHECK_THROWS_AS(make_drift("linear", 2, Mat::Identity(2, 2)), ConfigError);  // unstable
  CHECK(make_drift("zero", 2)->is_zero());
}
