#include "levybel/moments.hpp"

#include "levybel/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace levybel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integral of fn(phi(r)) times the symmetrized density over [lo, hi].
template <class Fn>
double over_measure(const MomentQuery& q, double lo, double hi, Fn fn) {
  const double delta = q.field.delta;
  auto integrand = [&](double r) {
    const double h = phi(r, q.field);
    double rho = 0.0;
    if (const auto* st = std::get_if<StableMeasure>(&q.measure)) {
      rho = 2.0 * st->scale() * std::pow(r, -1.0 - st->alpha());
    } else {
      rho = density(q.measure, r, delta) + density(q.measure, -r, delta);
    }
    return fn(h) * rho;
  };
  return quad::integrate_dyadic(integrand, lo, hi, 1e-11);
}

double upper_limit(const MomentQuery& q) { return q.field.delta * (1.0 - 1e-12); }

// Below this radius the untruncated exponent is taken from 1 - e^-x ~ x.
double inner_radius(const MomentQuery& q) { return q.field.delta * std::ldexp(1.0, -60); }

// Per unit time: P(beta) = int (1 - e^{-beta h}) dm.
double exponent(const MomentQuery& q, double beta) {
  if (beta == 0.0) return 0.0;
  if (!q.atoms.empty()) {
    double s = 0.0;
    for (const auto& [h, mass] : q.atoms) s -= mass * std::expm1(-beta * h);
    return s;
  }
  auto f = [beta](double h) { return -std::expm1(-beta * h); };
  if (q.eps_trunc > 0.0) {
    if (q.eps_trunc >= q.field.delta) return 0.0;
    return over_measure(q, q.eps_trunc, upper_limit(q), f);
  }
  const double r0 = inner_radius(q);
  double below = 0.0;
  if (const auto* st = std::get_if<StableMeasure>(&q.measure)) {
    const double e = q.field.kappa - st->alpha();
    below = 2.0 * st->scale() * beta * std::pow(r0, e) / e;
  }
  return below + over_measure(q, r0, upper_limit(q), f);
}

// Per unit time: C(beta) = int_{eps <= |xi| < delta} e^{-beta h} dm.
double complement(const MomentQuery& q, double beta) {
  if (!q.atoms.empty()) {
    double s = 0.0;
    for (const auto& [h, mass] : q.atoms) s += mass * std::exp(-beta * h);
    return s;
  }
  if (q.eps_trunc >= q.field.delta) return 0.0;
  return over_measure(q, q.eps_trunc, upper_limit(q), [beta](double h) { return std::exp(-beta * h); });
}

// int_0^t g(beta psi(s)) ds for g vanishing at 0 when s >= delta is not needed.
template <class G>
double time_integral(const MomentQuery& q, double beta, double t_end, G g) {
  if (!q.atoms.empty()) return t_end * g(beta);  // atoms carry no time cutoff
  const double half = 0.5 * q.field.delta;
  if (t_end <= half) return t_end * g(beta);
  double s = half * g(beta);
  const double upper = std::min(t_end, q.field.delta);
  s += quad::integrate([&](double u) { return g(beta * psi(u, q.field)); }, half, upper, 1e-10);
  return s;
}

}  // namespace

void MomentQuery::validate() const {
  field.validate();
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("moment query: t must be positive");
  if (!(q >= 1.0) || !std::isfinite(q)) throw ConfigError("moment query: q must be at least 1");
  if (!atoms.empty()) {
    for (const auto& [h, mass] : atoms) {
      if (!(h > 0.0) || !(mass >= 0.0) || !std::isfinite(h) || !std::isfinite(mass)) {
        throw ConfigError("moment query: atoms need h > 0 and finite mass >= 0");
      }
    }
    return;
  }
  if (!(eps_trunc >= 0.0) || !std::isfinite(eps_trunc)) throw ConfigError("moment query: eps_trunc must be >= 0");
  if (eps_trunc == 0.0 && !std::holds_alternative<StableMeasure>(measure)) {
    throw UnsupportedMeasureError("moment query: the untruncated oracle needs a stable measure");
  }
}

double laplace_exponent(const MomentQuery& q, double beta) {
  q.validate();
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("laplace_exponent needs beta >= 0");
  return exponent(q, beta);
}

double small_jump_mass(const MomentQuery& q) {
  q.validate();
  if (!q.atoms.empty()) {
    double s = 0.0;
    for (const auto& a : q.atoms) s += a.second;
    return s;
  }
  if (q.eps_trunc == 0.0) return kInf;
  if (q.eps_trunc >= q.field.delta) return 0.0;
  return over_measure(q, q.eps_trunc, upper_limit(q), [](double) { return 1.0; });
}

NegativeMoment negative_moment(const MomentQuery& q) {
  q.validate();
  const bool conditional = !q.atoms.empty() || q.eps_trunc > 0.0;
  // psi(s) > 0 only for s < delta
  const double active = q.atoms.empty() ? std::min(q.t, q.field.delta) : q.t;
  NegativeMoment res;

  double lambda_inf = 0.0;
  if (conditional) {
    lambda_inf = active * small_jump_mass(q);
    res.prob_positive = -std::expm1(-lambda_inf);
    if (!(res.prob_positive > 0.0)) {
      throw DomainError("negative_moment: J = 0 almost surely (no mass inside the field support)");
    }
  }

  const double log_gamma_q = std::lgamma(q.q);
  // Integrand in u = log beta, including the Jacobian beta du.
  auto integrand = [&](double u) {
    const double beta = std::exp(u);
    const double lead = std::exp(q.q * u - log_gamma_q);
    if (conditional) {
      const double k = time_integral(q, beta, active, [&](double b) { return complement(q, b); });
      return lead * std::exp(-lambda_inf) * std::expm1(k);
    }
    const double lam = time_integral(q, beta, q.t, [&](double b) { return exponent(q, b); });
    return lead * std::exp(-lam);
  };

  constexpr double u_lo = -40.0;
  // beta^q must stay finite; a tail still alive there is treated as divergent.
  const double u_cap = std::min(400.0, 650.0 / q.q);
  constexpr double width = 1.0;
  double total = 0.0;
  double peak = integrand(u_lo);
  double u = u_lo;
  bool past_peak = false;
  for (;;) {
    if (u >= u_cap) {
      throw IntegrationError("negative_moment: outer integrand does not decay (divergent moment?)");
    }
    total += quad::integrate(integrand, u, u + width, 1e-10);
    u += width;
    const double v = integrand(u);
    if (!std::isfinite(v)) throw IntegrationError("negative_moment: non-finite outer integrand");
    if (v >= peak) {
      peak = v;
    } else {
      past_peak = true;
    }
    if (past_peak && v < 1e-14 * peak) break;
  }
  res.u_max = u;
  res.value = conditional ? total / res.prob_positive : total;
  if (!std::isfinite(res.value)) throw IntegrationError("negative_moment: non-finite result");
  return res;
}

}  // namespace levybel
