#include "levybel/field.hpp"

#include "vmath.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace levybel {

namespace {

// Smooth step h(x) / (h(x) + h(1 - x)) with h(x) = exp(-1/x), written as
// 1 / (1 + e^z), z = 1/x - 1/(1-x), so one exponential suffices.
double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double z = 1.0 / x - 1.0 / (1.0 - x);
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double smooth_step_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double z = 1.0 / x - 1.0 / (1.0 - x);
  const double e = std::exp(-std::abs(z));
  const double dz = 1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x));
  return e * dz / ((1.0 + e) * (1.0 + e));
}

}  // namespace

void FieldParams::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("field delta must be positive");
  if (!(kappa > 1.0) || !std::isfinite(kappa)) throw ConfigError("field kappa must exceed 1");
}

void check_consistent(const FieldParams& f, const MeasureParams& m) {
  if (f.delta != m.delta || f.kappa != m.kappa) {
    throw ConfigError("field parameters (delta=" + std::to_string(f.delta) + ", kappa=" + std::to_string(f.kappa) +
                      ") differ from measure parameters (delta=" + std::to_string(m.delta) +
                      ", kappa=" + std::to_string(m.kappa) + ")");
  }
}

double psi(double r, const FieldParams& p) {
  const double a = std::abs(r);
  const double half = 0.5 * p.delta;
  if (a <= half) return 1.0;
  if (a >= p.delta) return 0.0;
  return smooth_step((p.delta - a) / half);
}

double psi_prime(double r, const FieldParams& p) {
  const double a = std::abs(r);
  const double half = 0.5 * p.delta;
  if (a <= half || a >= p.delta) return 0.0;
  const double d = -smooth_step_prime((p.delta - a) / half) / half;
  return r > 0 ? d : -d;
}

double phi(double r, const FieldParams& p) {
  if (r == 0.0) return 0.0;
  const double a = std::abs(r);
  if (a >= p.delta) return 0.0;
  return std::exp((p.kappa - 1.0) * std::log(a)) * a * psi(r, p);
}

double phi_prime(double r, const FieldParams& p) {
  if (r == 0.0) throw DomainError("phi_prime is not defined at r = 0");
  const double a = std::abs(r);
  if (a >= p.delta) return 0.0;
  const double sgn = r > 0 ? 1.0 : -1.0;
  const double pk1 = std::exp((p.kappa - 1.0) * std::log(a));
  return p.kappa * pk1 * sgn * psi(r, p) + pk1 * a * psi_prime(r, p);
}

double v_weight(double s, double xi, const FieldParams& p) { return psi(s, p) * phi(xi, p); }

double ibp_integrand(const LevyMeasure& m, double xi, const FieldParams& p) {
  if (xi == 0.0 || !(std::abs(xi) < p.delta)) {
    throw DomainError("ibp_integrand: xi = " + std::to_string(xi) + " outside (-delta, delta) \\ {0}");
  }
  return phi_prime(xi, p) + phi(xi, p) * log_density_derivative(m, xi, p.delta);
}

namespace {

// Fills phi, dphi and g once psi(s) > 0 and pk1 = |xi|^(kappa-1) are known.
void finish_values(JumpFieldValues& v, const LevyMeasure& m, double xi, double pk1, const FieldParams& p) {
  const double a = std::abs(xi);
  const double sgn = xi > 0 ? 1.0 : -1.0;
  const double pk = pk1 * a;
  double ps = 1.0;
  double dps = 0.0;
  if (a > 0.5 * p.delta) {
    ps = psi(xi, p);
    dps = psi_prime(xi, p);
  }
  v.phi = pk * ps;
  v.dphi = p.kappa * pk1 * sgn * ps + pk * dps;
  if (const auto* st = std::get_if<StableMeasure>(&m)) {
    // phi rho'/rho = -(1 + alpha) phi / xi = -(1 + alpha) sgn |xi|^(kappa-1) psi(xi)
    v.g = sgn * pk1 * ps * (p.kappa - 1.0 - st->alpha()) + pk * dps;
  } else {
    v.g = v.dphi + v.phi * log_density_derivative(m, xi, p.delta);
  }
}

}  // namespace

JumpFieldValues jump_field_values(const LevyMeasure& m, double s, double xi, const FieldParams& p) {
  JumpFieldValues v;
  const double a = std::abs(xi);
  if (a >= p.delta || xi == 0.0) return v;
  v.psi_s = psi(s, p);
  if (v.psi_s == 0.0) return v;
  finish_values(v, m, xi, std::exp((p.kappa - 1.0) * std::log(a)), p);
  return v;
}

void jump_field_values(const LevyMeasure& m, std::span<const double> s, std::span<const double> xi,
                       const FieldParams& p, std::span<JumpFieldValues> out) {
  const std::size_t n = s.size();
  if (xi.size() != n || out.size() != n) throw DomainError("jump_field_values: span sizes differ");
  const double half = 0.5 * p.delta;
  const auto* stable = std::get_if<StableMeasure>(&m);
  const double stable_g = stable ? p.kappa - 1.0 - stable->alpha() : 0.0;
  constexpr std::size_t kChunk = 256;
  // pk1 = exp((kappa - 1) log|xi|); the time step is 1 / (1 + e^z) written with exp(-|z|).
  std::array<double, kChunk> pk1, z, ez;
  for (std::size_t i0 = 0; i0 < n; i0 += kChunk) {
    const std::size_t len = std::min(kChunk, n - i0);
    for (std::size_t k = 0; k < len; ++k) {
      const double a = std::abs(xi[i0 + k]);
      pk1[k] = a > 0.0 ? a : 1.0;
      const double sa = std::abs(s[i0 + k]);
      z[k] = 0.0;
      if (sa > half && sa < p.delta) {
        const double x = (p.delta - sa) / half;
        z[k] = 1.0 / x - 1.0 / (1.0 - x);
      }
      // exp(-800) is 0 in double, like exp(-inf) at the ends of the step.
      ez[k] = std::max(-std::abs(z[k]), -800.0);
    }
    vmath::log_inplace(pk1.data(), len);
    for (std::size_t k = 0; k < len; ++k) pk1[k] *= p.kappa - 1.0;
    vmath::exp_inplace(pk1.data(), len);
    vmath::exp_inplace(ez.data(), len);
    for (std::size_t k = 0; k < len; ++k) {
      JumpFieldValues v;
      const double x = xi[i0 + k];
      const double a = std::abs(x);
      const double sa = std::abs(s[i0 + k]);
      if (a < p.delta && x != 0.0 && sa < p.delta) {
        const double e = ez[k];
        v.psi_s = sa <= half ? 1.0 : (z[k] > 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e));
        if (v.psi_s != 0.0) {
          if (stable && a <= half) {
            // psi(xi) = 1 and psi'(xi) = 0 here.
            const double sp = x > 0 ? pk1[k] : -pk1[k];
            v.phi = pk1[k] * a;
            v.dphi = p.kappa * sp;
            v.g = stable_g * sp;
          } else {
            finish_values(v, m, x, pk1[k], p);
          }
        }
      }
      out[i0 + k] = v;
    }
  }
}

}  // namespace levybel
