#include "levybel/weights.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

namespace levybel {

std::string to_string(WeightFailure f) {
  switch (f) {
    case WeightFailure::none:
      return "none";
    case WeightFailure::no_small_jumps:
      return "no_small_jumps";
    case WeightFailure::q_bound_violated:
      return "q_bound_violated";
    case WeightFailure::singular_M:
      return "singular_M";
  }
  return "unknown";
}

Vec y_levy(const FlowState& s) {
  const int d = s.dim();
  Vec y(d);
  for (int j = 0; j < d; ++j) {
    const double z = s.ZV[j];
    if (!(z > 0.0)) {
      throw WeightError(WeightFailure::no_small_jumps,
                        "coordinate " + std::to_string(j + 1) + " has no jump inside the field support");
    }
    y[j] = s.Dstar1[j] / z + s.DZV[j] / (z * z);
  }
  return y;
}

WeightBundle y_general(const FlowState& s, double q_max) {
  const int d = s.dim();
  WeightBundle b;
  b.y_levy = Vec::Zero(d);
  b.y_general = Vec::Zero(d);
  b.A = Mat::Zero(d, d);
  if ((s.ZV.array() <= 0.0).any()) {
    b.failure_reason = WeightFailure::no_small_jumps;
    return b;
  }
  b.y_levy = y_levy(s);

  Mat Q = s.M;
  Q.diagonal() -= s.ZV;
  for (int j = 0; j < d; ++j) Q.col(j) /= s.ZV[j];
  b.q_norm = d == 1 ? std::abs(Q(0, 0)) : Eigen::JacobiSVD<Mat>(Q).singularValues()[0];
  if (!(b.q_norm <= q_max)) {
    b.failure_reason = WeightFailure::q_bound_violated;
    return b;
  }

  const Eigen::FullPivLU<Mat> lu(s.M);
  if (!lu.isInvertible()) {
    b.failure_reason = WeightFailure::singular_M;
    return b;
  }
  b.A = lu.inverse();
  if (!b.A.allFinite()) {
    b.failure_reason = WeightFailure::singular_M;
    return b;
  }

  // Y_j = (A^T Dstar1)_j + sum_k (A DM_k A)_kj
  b.y_general.noalias() = b.A.transpose() * s.Dstar1;
  for (int k = 0; k < d; ++k) {
    const Vec row = s.DM[static_cast<std::size_t>(k)].transpose() * b.A.row(k).transpose();
    b.y_general.noalias() += b.A.transpose() * row;
  }
  b.valid = b.y_general.allFinite();
  if (!b.valid) b.failure_reason = WeightFailure::singular_M;
  return b;
}

Vec weight_difference(const FlowState& levy, const FlowState& drift, double q_max) {
  const Vec yl = y_levy(levy);
  const WeightBundle b = y_general(drift, q_max);
  if (!b.valid) throw WeightError(b.failure_reason, "drifted weight invalid: " + to_string(b.failure_reason));
  return yl - b.y_general;
}

}  // namespace levybel
