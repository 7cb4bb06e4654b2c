#pragma once

#include "levybel/flow.hpp"

#include <string>

namespace levybel {

enum class WeightFailure { none, no_small_jumps, q_bound_violated, singular_M };

std::string to_string(WeightFailure f);

// Thrown by y_levy when the weight is undefined on the path.
class WeightError : public Error {
 public:
  WeightError(WeightFailure reason, const std::string& what) : Error(what), reason_(reason) {}
  WeightFailure reason() const { return reason_; }

 private:
  WeightFailure reason_;
};

struct WeightBundle {
  Vec y_levy;     // pure jump weight, from the drift-free accumulators
  Vec y_general;  // drifted weight
  Mat A;          // M^-1
  double q_norm = 0.0;  // ||(M - diag ZV) diag(ZV)^-1||_2
  bool valid = false;
  WeightFailure failure_reason = WeightFailure::none;
};

// Y_j = Dstar1_j / ZV_j + DZV_j / ZV_j^2. Throws WeightError(no_small_jumps)
// if some ZV_j is zero.
Vec y_levy(const FlowState& s);

// Drifted weight Y_j = sum_k [A_kj Dstar1_k + (A DM_k A)_kj] with A = M^-1.
// Paths with ||Q||_2 > q_max are rejected (q_bound_violated); a rank deficient
// M gives singular_M. Never throws for weight failures.
WeightBundle y_general(const FlowState& s, double q_max = 0.5);

// y_levy(levy) - y_general(drift).y_general; both states must come from the
// same jump path. Throws WeightError when either side is invalid.
Vec weight_difference(const FlowState& levy, const FlowState& drift, double q_max = 0.5);

}  // namespace levybel
