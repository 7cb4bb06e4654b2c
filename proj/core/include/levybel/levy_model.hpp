#pragma once

#include "levybel/quadrature.hpp"
#include "levybel/types.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace levybel {

// Symmetric alpha-stable Levy measure with density scale * |xi|^(-1-alpha).
class StableMeasure {
 public:
  StableMeasure(double alpha, double scale = 1.0);

  double alpha() const { return alpha_; }
  double scale() const { return scale_; }

 private:
  double alpha_;
  double scale_;
};

// Levy measure given by callables. The density and its log-derivative only
// need to be valid on (-delta, delta) \ {0}; the tail functions cover all
// magnitudes, including jumps larger than delta.
struct TabulatedMeasure {
  std::function<double(double)> density;
  std::function<double(double)> log_deriv;
  // eps -> m{|xi| >= eps}, nonincreasing, finite for eps > 0.
  std::function<double(double)> tail_cdf;
  // eps -> m{xi >= eps}. Required only for asymmetric measures.
  std::function<double(double)> positive_tail;
  // Optional exact inverse: (eps_trunc, u) -> |xi| with law of |xi| given
  // |xi| >= eps_trunc (on the chosen side for asymmetric measures the
  // generic numeric inversion is used instead).
  std::function<double(double, double)> magnitude_sampler;
  bool symmetric = true;
  // Constant drift that compensates the jumps in [eps_trunc, 1) for
  // asymmetric measures. Asymmetric measures without it cannot be simulated.
  std::optional<double> compensator_drift;
};

using LevyMeasure = std::variant<StableMeasure, TabulatedMeasure>;

struct MeasureParams {
  double delta = 0.5;
  double kappa = 2.0;
  double rho_index = 1.0;  // small-jump index; equals alpha for stable measures

  void validate() const;
};

// kappa = 1 + 3 alpha / 4 keeps kappa > 1 + alpha / 2 with margin.
double default_kappa(double alpha);

// min(1e-4, (delta / 2) t_min^(2 / alpha)).
double default_eps_trunc(double alpha, double delta, double t_min);

MeasureParams default_stable_params(double alpha, double delta = 0.5);

bool is_symmetric(const LevyMeasure& m);
std::optional<double> compensator_drift(const LevyMeasure& m);
std::string describe(const LevyMeasure& m);

// Throws DomainError unless 0 < |xi| < delta.
double density(const LevyMeasure& m, double xi, double delta);
double log_density_derivative(const LevyMeasure& m, double xi, double delta);

// m{|xi| >= eps}; eps must be positive.
double tail_mass(const LevyMeasure& m, double eps);
// m{xi >= eps} (sign > 0) or m{xi <= -eps} (sign < 0).
double side_tail_mass(const LevyMeasure& m, double eps, int sign);

// Inverse-CDF draw from m restricted to |xi| >= eps_trunc. `u` picks the
// magnitude, `sign_draw` the sign; both are uniform(0,1) variates.
double sample_jump_size(const LevyMeasure& m, double eps_trunc, double u, double sign_draw);

// int_{|xi| < eps} xi^2 m(dxi): variance carried by the dropped small jumps.
double dropped_jump_variance(const LevyMeasure& m, double eps, double delta);

struct IntegralCheck {
  std::string name;
  quad::Convergence verdict = quad::Convergence::inconclusive;
  double value = 0.0;
};

struct ProxySequence {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (eps or r, value)
  std::string verdict;
};

struct AssumptionReport {
  IntegralCheck kappa_moment;           // int |xi|^kappa rho
  IntegralCheck score_moment;           // int |xi|^(2 kappa) (rho'/rho)^2 rho
  IntegralCheck shifted_kappa_moment;   // int |xi|^(2 kappa - 2) rho
  ProxySequence small_jump_index;       // eps^rho m{|xi| >= eps} on eps = delta 2^-k
  ProxySequence sharp_scaling;          // r^((2 - 2 kappa)/rho + 1) int_{-r}^{r} [...] rho
  bool kappa_above_stable_threshold = true;  // kappa > 1 + rho / 2

  bool all_integrals_finite() const;
};

AssumptionReport check_assumptions(const LevyMeasure& m, const MeasureParams& params);

// -----------------------------------------------------------------------------
// Text table loader.
//
//   # levybel-measure-table v1
//   # symmetric: true
//   # compensator_drift: 0.0          (optional, asymmetric tables only)
//   xi rho rho_prime
//   <rows, whitespace or comma separated, xi strictly increasing>
//
// Symmetric tables may list only xi > 0. The density is interpolated by cubic
// Hermite splines in (log|xi|, log rho) using rho_prime, which reproduces pure
// power laws exactly; below the smallest |xi| the end power law is extended
// to 0, above the largest |xi| the measure has no mass.
// -----------------------------------------------------------------------------
TabulatedMeasure parse_measure_table(std::istream& in);
TabulatedMeasure load_measure_table(const std::string& path);

}  // namespace levybel
