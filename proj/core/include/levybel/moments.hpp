#pragma once

#include "levybel/field.hpp"

#include <utility>
#include <vector>

namespace levybel {

// J(t) = sum over jumps of psi(s) h(xi) with h = phi, for one coordinate.
struct MomentQuery {
  LevyMeasure measure = StableMeasure(1.5);
  FieldParams field;
  double t = 0.25;
  double q = 2.0;
  // Smallest simulated jump. 0 selects the untruncated measure, for which
  // J > 0 almost surely and no conditioning is needed.
  double eps_trunc = 1e-2;
  // Finite measure given directly as (h value, mass) atoms. When non-empty it
  // replaces `measure`, `eps_trunc`, phi and the time cutoff psi(s), so
  // J(t) = sum_i h_i N_i(t) with Poisson counts N_i.
  std::vector<std::pair<double, double>> atoms;

  void validate() const;
};

// int_{|xi| >= eps_trunc} (1 - exp(-beta phi(xi))) m(dxi), beta >= 0.
double laplace_exponent(const MomentQuery& q, double beta);

// m{eps_trunc <= |xi| < delta}: rate of jumps that move J. Infinite when
// untruncated.
double small_jump_mass(const MomentQuery& q);

struct NegativeMoment {
  double value = 0.0;           // E[J^-q | J > 0]
  double prob_positive = 1.0;   // P(J > 0)
  double u_max = 0.0;           // upper end of the outer integral in log beta
};

// Outer integral over u = log beta on [-40, U], U grown until the integrand
// drops below 1e-14 of its peak. Throws IntegrationError if it never does.
NegativeMoment negative_moment(const MomentQuery& q);

}  // namespace levybel
