#pragma once

#include "levybel/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace levybel {

// Drift b : R^d -> R^d with bounded first and second derivatives.
// Implementations must be pure so one instance can be shared by all workers.
class DriftModel {
 public:
  virtual ~DriftModel() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool is_zero() const { return false; }

  virtual Vec value(const Vec& x) const = 0;
  // Row i is the gradient of b_i.
  virtual Mat jacobian(const Vec& x) const = 0;
  // sum_k v_k d/dx_k jacobian(x), i.e. the second derivative contracted with v.
  virtual Mat jacobian_directional(const Vec& x, const Vec& v) const = 0;

  // value, jacobian and jacobian_directional(x, V.col(k)) for every column k
  // of V, in one call so implementations can share work. `dir` must have
  // room for V.cols() matrices.
  virtual void linearize(const Vec& x, const Mat& V, Vec& value, Mat& jac, Mat* dir) const;

  // hessian(x)[k](i, j) = d^2 b_i / dx_j dx_k.
  std::vector<Mat> hessian(const Vec& x) const;
};

class ZeroDrift final : public DriftModel {
 public:
  explicit ZeroDrift(int d) : d_(d) {}
  int dim() const override { return d_; }
  std::string name() const override { return "zero"; }
  bool is_zero() const override { return true; }
  Vec value(const Vec& x) const override { return Vec::Zero(x.size()); }
  Mat jacobian(const Vec& x) const override { return Mat::Zero(x.size(), x.size()); }
  Mat jacobian_directional(const Vec& x, const Vec&) const override { return Mat::Zero(x.size(), x.size()); }

 private:
  int d_;
};

// b(x) = B x.
class LinearDrift final : public DriftModel {
 public:
  explicit LinearDrift(Mat B);
  int dim() const override { return static_cast<int>(B_.rows()); }
  std::string name() const override { return "linear"; }
  Vec value(const Vec& x) const override { return B_ * x; }
  Mat jacobian(const Vec&) const override { return B_; }
  Mat jacobian_directional(const Vec& x, const Vec&) const override { return Mat::Zero(x.size(), x.size()); }
  const Mat& matrix() const { return B_; }

 private:
  Mat B_;
};

// b(x) = B tanh(x), tanh applied componentwise.
class TanhDrift final : public DriftModel {
 public:
  explicit TanhDrift(Mat B);
  int dim() const override { return static_cast<int>(B_.rows()); }
  std::string name() const override { return "tanh"; }
  Vec value(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  Mat jacobian_directional(const Vec& x, const Vec& v) const override;
  void linearize(const Vec& x, const Mat& V, Vec& value, Mat& jac, Mat* dir) const override;
  const Mat& matrix() const { return B_; }

 private:
  Mat B_;
};

// Stable test matrix: -1 on the diagonal, 0.5 above, -0.3 below.
Mat shipped_drift_matrix(int d);

// Registry: "zero", "linear", "tanh". An empty matrix selects the shipped one.
std::shared_ptr<const DriftModel> make_drift(const std::string& id, int d, const Mat& matrix = Mat());

}  // namespace levybel
