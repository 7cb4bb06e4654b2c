#pragma once

#include "levybel/levy_model.hpp"

#include <span>

namespace levybel {

// Parameters of the cutoff field V(s, xi) = psi(s) phi(xi). They must match
// the MeasureParams used in the same experiment.
struct FieldParams {
  double delta = 0.5;
  double kappa = 2.0;

  void validate() const;
  static FieldParams from(const MeasureParams& p) { return FieldParams{p.delta, p.kappa}; }
};

// Throws ConfigError when delta or kappa differ between the two.
void check_consistent(const FieldParams& f, const MeasureParams& m);

// C-infinity bump: 1 on |r| <= delta/2, 0 on |r| >= delta, built from the
// exp(-1/x) partition of unity in between. Even and monotone in |r|.
double psi(double r, const FieldParams& p);
double psi_prime(double r, const FieldParams& p);

// phi(r) = |r|^kappa psi(r), extended by 0 at r = 0.
double phi(double r, const FieldParams& p);
// Exact derivative of phi; r must be nonzero.
double phi_prime(double r, const FieldParams& p);

// V(s, xi) = psi(s) phi(xi).
double v_weight(double s, double xi, const FieldParams& p);

// Spatial factor of the integration-by-parts integrand,
//   g(xi) = (phi rho)'(xi) / rho(xi) = phi'(xi) + phi(xi) rho'(xi)/rho(xi),
// for 0 < |xi| < delta. The psi(s) time factor is applied by the caller.
double ibp_integrand(const LevyMeasure& m, double xi, const FieldParams& p);

// Values needed per jump by the flow, evaluated with shared subexpressions.
struct JumpFieldValues {
  double psi_s = 0.0;  // psi(s)
  double phi = 0.0;    // phi(xi)
  double dphi = 0.0;   // phi'(xi)
  double g = 0.0;      // ibp_integrand(xi)
};

// Fast path for a stable measure; generic measures go through ibp_integrand.
JumpFieldValues jump_field_values(const LevyMeasure& m, double s, double xi, const FieldParams& p);

// Batched form over the jumps of one coordinate: out[i] holds the values for
// (s[i], xi[i]). exp and log run over whole arrays, so results can differ from
// the scalar form in the last bits.
void jump_field_values(const LevyMeasure& m, std::span<const double> s, std::span<const double> xi,
                       const FieldParams& p, std::span<JumpFieldValues> out);

}  // namespace levybel
