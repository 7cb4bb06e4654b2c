#include "levybel/quadrature.hpp"

#include "levybel/types.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace levybel::quad {

double integrate(const Integrand& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  // Boost compares the error of the rule on [-1, 1] against a tolerance
  // scaled to [a, b], which never converges on short intervals. Map to
  // [-1, 1] first so both sides use the same scale.
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  auto g = [&](double x) { return f(mid + half * x); };
  double err = 0.0;
  double l1 = 0.0;
  const double value =
      half * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, -1.0, 1.0, 20, rel_tol, &err, &l1);
  err *= std::abs(half);
  l1 *= std::abs(half);
  if (!std::isfinite(value)) {
    throw IntegrationError("quadrature produced a non-finite value on [" + std::to_string(a) +
                           ", " + std::to_string(b) + "]");
  }
  // The Kronrod error estimate is pessimistic by a couple of orders of
  // magnitude for smooth integrands; allow for that before giving up.
  const double allowed = std::max(1e3 * rel_tol * l1, 1e-300);
  if (err > allowed) {
    throw IntegrationError("quadrature tolerance not met on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "], error estimate " + std::to_string(err));
  }
  return value;
}

std::string to_string(Convergence c) {
  switch (c) {
    case Convergence::finite:
      return "finite";
    case Convergence::infinite:
      return "infinite";
    case Convergence::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

SingularIntegral integrate_to_zero(const Integrand& f, double r_max, int levels, double rel_tol) {
  SingularIntegral out;
  std::vector<double> shells;
  double sum = 0.0;
  double hi = r_max;
  for (int n = 0; n < levels; ++n) {
    const double lo = hi * 0.5;
    const double s = integrate(f, lo, hi, rel_tol);
    shells.push_back(s);
    sum += s;
    out.partial_sums.push_back(sum);
    hi = lo;
    // Negligible tail: the remaining shells cannot move the sum.
    if (n >= 4 && std::abs(s) <= 1e-17 * std::abs(sum)) break;
  }
  for (std::size_t i = 1; i < shells.size(); ++i) {
    const double prev = std::abs(shells[i - 1]);
    out.shell_ratios.push_back(prev > 0.0 ? std::abs(shells[i]) / prev : 0.0);
  }
  out.value = sum;

  const double last_shell = std::abs(shells.back());
  if (last_shell <= 1e-17 * std::abs(sum) || last_shell == 0.0) {
    out.verdict = Convergence::finite;
    return out;
  }
  if (out.shell_ratios.size() < 3) {
    out.verdict = Convergence::inconclusive;
    return out;
  }
  const std::size_t m = out.shell_ratios.size();
  const double q0 = out.shell_ratios[m - 3];
  const double q1 = out.shell_ratios[m - 2];
  const double q2 = out.shell_ratios[m - 1];
  const double qmax = std::max({q0, q1, q2});
  const double qmin = std::min({q0, q1, q2});
  if (qmax - qmin > 0.1 * qmax) {
    out.verdict = Convergence::inconclusive;
    return out;
  }
  if (q2 < 1.0 - 1e-9) {
    // Geometric tail: sum_{k>=1} s_last q^k.
    out.value = sum + shells.back() * q2 / (1.0 - q2);
    out.verdict = Convergence::finite;
  } else {
    out.value = std::numeric_limits<double>::infinity();
    out.verdict = Convergence::infinite;
  }
  return out;
}

double integrate_dyadic(const Integrand& f, double lo, double hi, double rel_tol) {
  if (!(lo > 0.0) || !(hi > lo)) {
    if (hi == lo) return 0.0;
    throw DomainError("integrate_dyadic needs 0 < lo < hi");
  }
  double sum = 0.0;
  double b = hi;
  while (b > lo) {
    const double a = std::max(lo, 0.5 * b);
    sum += integrate(f, a, b, rel_tol);
    b = a;
  }
  return sum;
}

}  // namespace levybel::quad
