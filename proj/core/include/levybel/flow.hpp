#pragma once

#include "levybel/drift.hpp"
#include "levybel/field.hpp"
#include "levybel/jump_engine.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace levybel {

// Joint pathwise state at time t. Matrices follow the column convention:
// column k of DX is D_k X, DJ[k] is D_k of the Jacobian, DM[k] is D_k M.
struct FlowState {
  double t = 0.0;
  Vec X;
  Mat J;       // Jacobian of X(t) with respect to x0
  Mat Jinv;    // its inverse, integrated by its own ODE
  Mat DX;      // Malliavin matrix
  std::vector<Mat> DJ;
  Vec ZV;      // diagonal of Z^V
  Vec DZV;     // D_k Z^V_kk
  Vec Dstar1;  // D_k^* 1
  Mat M;       // int Jinv(s-) dZ^V(s)
  std::vector<Mat> DM;
  Vec sum_psi2_dphi2;  // per coordinate: sum over jumps of psi(s)^2 phi'(xi)^2
  int small_jumps = 0;  // jumps that landed in the field support

  int dim() const { return static_cast<int>(X.size()); }
  // ||J Jinv - I||_F
  double inverse_defect() const;
};

// heun is second order and meant for paths with many short inter-jump gaps.
enum class OdeMethod { rk4, heun, rk45 };

struct OdeOptions {
  OdeMethod method = OdeMethod::rk4;
  int min_substeps = 8;      // per inter-jump gap (rk4, heun)
  double max_step = 0.0;     // absolute; <= 0 selects horizon / 64
  double tolerance = 1e-10;  // local error target (rk45)

  void validate() const;
};

// Integrates state, Jacobian, inverse Jacobian, Malliavin matrix, second
// variations and the Malliavin accumulators along `path`, returning one
// FlowState per entry of t_out (sorted, within [0, horizon]). A jump at time
// exactly t_out[i] is included in output i.
std::vector<FlowState> evolve(const DriftModel& drift, const Vec& x0, const JumpPath& path,
                              std::span<const double> t_out, const FieldParams& field,
                              const std::vector<LevyMeasure>& measures, const OdeOptions& opts);

FlowState evolve_to(const DriftModel& drift, const Vec& x0, const JumpPath& path, double t,
                    const FieldParams& field, const std::vector<LevyMeasure>& measures, const OdeOptions& opts);

// X(t) only, on the same step grid as evolve(), so the two agree bitwise.
Vec terminal_state(const DriftModel& drift, const Vec& x0, const JumpPath& path, double t, const OdeOptions& opts);

struct PathwiseResidual {
  double residual = 0.0;    // |X^eps(t) - X(t) - eps D_k X(t)|
  double normalized = 0.0;  // residual / eps^2
};

// Checks column k of the Malliavin matrix against the difference quotient of
// the flow under the coordinate-k jump-size shift.
PathwiseResidual pathwise_derivative_residual(const DriftModel& drift, const Vec& x0, const JumpPath& path,
                                              double t, int k, double eps, const FieldParams& field,
                                              const std::vector<LevyMeasure>& measures, const OdeOptions& opts);

// Functionals of the driving noise alone: Z(t), ZV, DZV and D*1. Same sums in
// the same order as evolve() with zero drift from x0 = 0, so for symmetric
// measures the values agree bitwise, at a fraction of the cost.
struct NoiseFunctionals {
  Vec Z;
  Vec ZV;
  Vec DZV;
  Vec Dstar1;
};

NoiseFunctionals noise_functionals(const JumpPath& path, double t, const FieldParams& field,
                                   const std::vector<LevyMeasure>& measures);

// CSV trace: t, x_1..x_d, zv_1..zv_d, inverse_defect.
void write_trace(std::ostream& out, std::span<const FlowState> states);

}  // namespace levybel
