#include "levybel/drift.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace levybel {

std::vector<Mat> DriftModel::hessian(const Vec& x) const {
  const int d = static_cast<int>(x.size());
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) out.push_back(jacobian_directional(x, Vec::Unit(d, k)));
  return out;
}

void DriftModel::linearize(const Vec& x, const Mat& V, Vec& value, Mat& jac, Mat* dir) const {
  value = this->value(x);
  jac = jacobian(x);
  for (int k = 0; k < V.cols(); ++k) dir[k] = jacobian_directional(x, V.col(k));
}

namespace {

void require_square(const Mat& B, const char* who) {
  if (B.rows() == 0 || B.rows() != B.cols()) throw ConfigError(std::string(who) + ": drift matrix must be square");
  if (!B.allFinite()) throw ConfigError(std::string(who) + ": drift matrix has non-finite entries");
}

}  // namespace

LinearDrift::LinearDrift(Mat B) : B_(std::move(B)) { require_square(B_, "linear drift"); }

TanhDrift::TanhDrift(Mat B) : B_(std::move(B)) { require_square(B_, "tanh drift"); }

namespace {

// tanh from one exp; absolute error stays at rounding level for all x, which
// is what the flow needs, and it is several times cheaper than std::tanh.
inline double fast_tanh(double x) {
  const double e = std::exp(-2.0 * std::abs(x));
  const double t = (1.0 - e) / (1.0 + e);
  return x < 0.0 ? -t : t;
}

}  // namespace

Vec TanhDrift::value(const Vec& x) const {
  const int d = static_cast<int>(x.size());
  double th[kMaxDim];
  for (int c = 0; c < d; ++c) th[c] = fast_tanh(x[c]);
  Vec out(d);
  const double* B = B_.data();
  for (int r = 0; r < d; ++r) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += B[c * d + r] * th[c];
    out[r] = s;
  }
  return out;
}

Mat TanhDrift::jacobian(const Vec& x) const {
  Mat J = B_;
  for (int c = 0; c < x.size(); ++c) {
    const double th = fast_tanh(x[c]);
    J.col(c) *= 1.0 - th * th;
  }
  return J;
}

Mat TanhDrift::jacobian_directional(const Vec& x, const Vec& v) const {
  Mat H = B_;
  for (int c = 0; c < x.size(); ++c) {
    const double th = fast_tanh(x[c]);
    H.col(c) *= -2.0 * th * (1.0 - th * th) * v[c];
  }
  return H;
}

void TanhDrift::linearize(const Vec& x, const Mat& V, Vec& value, Mat& jac, Mat* dir) const {
  const int d = static_cast<int>(x.size());
  double th[kMaxDim], sech2[kMaxDim], curv[kMaxDim];
  for (int c = 0; c < d; ++c) {
    th[c] = fast_tanh(x[c]);
    sech2[c] = 1.0 - th[c] * th[c];
    curv[c] = -2.0 * th[c] * sech2[c];
  }
  // Same summation order as value(), so X agrees bitwise with it.
  const double* B = B_.data();
  value.resize(d);
  for (int r = 0; r < d; ++r) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += B[c * d + r] * th[c];
    value[r] = s;
  }
  jac.resize(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) jac(r, c) = B[c * d + r] * sech2[c];
  for (int k = 0; k < V.cols(); ++k) {
    Mat& H = dir[k];
    H.resize(d, d);
    for (int c = 0; c < d; ++c) {
      const double f = curv[c] * V(c, k);
      for (int r = 0; r < d; ++r) H(r, c) = B[c * d + r] * f;
    }
  }
}

Mat shipped_drift_matrix(int d) {
  Mat B = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    B(i, i) = -1.0;
    if (i + 1 < d) {
      B(i, i + 1) = 0.5;
      B(i + 1, i) = -0.3;
    }
  }
  return B;
}

std::shared_ptr<const DriftModel> make_drift(const std::string& id, int d, const Mat& matrix) {
  if (d < 1 || d > kMaxDim) throw ConfigError("drift dimension out of range");
  const Mat B = matrix.size() == 0 ? shipped_drift_matrix(d) : matrix;
  if (B.rows() != d || B.cols() != d) throw ConfigError("drift matrix has the wrong shape");
  if (id == "zero") return std::make_shared<ZeroDrift>(d);
  if (id == "linear") {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(B), false);
    if (es.eigenvalues().real().maxCoeff() >= 0.0) throw ConfigError("linear drift matrix must be stable");
    return std::make_shared<LinearDrift>(B);
  }
  if (id == "tanh") return std::make_shared<TanhDrift>(B);
  throw ConfigError("unknown drift '" + id + "' (expected zero, linear or tanh)");
}

}  // namespace levybel
