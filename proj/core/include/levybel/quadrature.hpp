#pragma once

#include <functional>
#include <string>
#include <vector>

namespace levybel::quad {

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod (15/31 point) on a finite interval. Throws
// IntegrationError when the requested relative tolerance is not reached.
double integrate(const Integrand& f, double a, double b, double rel_tol = 1e-12);

enum class Convergence { finite, infinite, inconclusive };

std::string to_string(Convergence c);

struct SingularIntegral {
  Convergence verdict = Convergence::inconclusive;
  double value = 0.0;  // extrapolated limit (or last partial sum if not finite)
  std::vector<double> partial_sums;  // integral over [r_n, r_max], r_n = r_max 2^-n
  std::vector<double> shell_ratios;  // successive shell-contribution ratios
};

// Integrates f over (0, r_max] where f may have a power-law singularity at 0.
// The domain is split into dyadic shells [r_max 2^-(n+1), r_max 2^-n]; each
// shell is integrated adaptively and the tail below the last cutoff is
// extrapolated geometrically from the observed shell ratio.
//
// Verdict: finite when the shell ratio settles below 1, infinite when it
// settles at or above 1, inconclusive when the ratio estimates across the last
// refinement levels disagree by more than 10%.
SingularIntegral integrate_to_zero(const Integrand& f, double r_max, int levels = 40,
                                   double rel_tol = 1e-12);

// Integral of f over [lo, hi] with 0 < lo < hi, splitting on a dyadic grid
// so each piece sees only a mild power-law variation.
double integrate_dyadic(const Integrand& f, double lo, double hi, double rel_tol = 1e-12);

}  // namespace levybel::quad
