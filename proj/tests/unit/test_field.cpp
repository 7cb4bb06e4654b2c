#include "doctest.h"
#include "levybel/field.hpp"
#include "levybel/quadrature.hpp"
#include "test_support.hpp"

#include <cmath>
#include <vector>

using namespace levybel;

namespace {

// Textbook partition of unity, written independently of the library.
double ref_step(double x) {
  auto h = [](double y) { return y > 0 ? std::exp(-1.0 / y) : 0.0; };
  return h(x) / (h(x) + h(1.0 - x));
}

double ref_psi(double r, double delta) {
  const double a = std::abs(r);
  if (a <= delta / 2) return 1.0;
  if (a >= delta) return 0.0;
  return ref_step((delta - a) / (delta / 2));
}

// Closed-form derivative of ref_psi; finite differences lose everything to
// roundoff next to the plateau where psi' ~ 1e-7 and psi ~ 1.
double ref_psi_prime(double r, double delta) {
  const double a = std::abs(r);
  if (a <= delta / 2 || a >= delta) return 0.0;
  auto h = [](double y) { return y > 0 ? std::exp(-1.0 / y) : 0.0; };
  auto dh = [&h](double y) { return y > 0 ? h(y) / (y * y) : 0.0; };
  const double x = (delta - a) / (delta / 2);
  const double den = h(x) + h(1.0 - x);
  const double step_prime = (dh(x) * h(1.0 - x) + h(x) * dh(1.0 - x)) / (den * den);
  const double d = -step_prime * 2.0 / delta;
  return r > 0 ? d : -d;
}

}  // namespace

TEST_CASE("psi is the exp(-1/x) bump with plateau and support") {
  const FieldParams p{0.5, 2.0};
  for (double r = -0.6; r <= 0.6; r += 0.0137) CHECK(psi(r, p) == doctest::Approx(ref_psi(r, 0.5)).epsilon(1e-13));
  CHECK(psi(0.25, p) == 1.0);
  CHECK(psi(0.5, p) == 0.0);
  CHECK(psi(0.375, p) == doctest::Approx(0.5));
  // monotone on the transition band
  double prev = 1.0;
  for (double r = 0.25; r <= 0.5; r += 0.001) {
    CHECK(psi(r, p) <= prev);
    prev = psi(r, p);
  }
}

TEST_CASE("derivatives match central differences") {
  const FieldParams p{0.5, 2.125};
  for (double r : {-0.45, -0.3, -0.1, 0.02, 0.26, 0.33, 0.41, 0.49}) {
    const double h = 1e-6;
    CHECK(psi_prime(r, p) == doctest::Approx(ref_psi_prime(r, 0.5)).epsilon(1e-12).scale(1e-12));
    CHECK(psi_prime(r, p) ==
          doctest::Approx(testing::central_diff([&](double x) { return psi(x, p); }, r, h)).epsilon(1e-6).scale(1e-4));
    CHECK(phi_prime(r, p) ==
          doctest::Approx(testing::central_diff([&](double x) { return phi(x, p); }, r, h)).epsilon(1e-6).scale(1e-6));
  }
  CHECK_THROWS_AS(phi_prime(0.0, p), DomainError);
}

TEST_CASE("phi and V") {
  const FieldParams p{0.5, 1.9};
  CHECK(phi(0.1, p) == doctest::Approx(std::pow(0.1, 1.9)));
  CHECK(phi(-0.1, p) == doctest::Approx(std::pow(0.1, 1.9)));
  CHECK(phi(0.0, p) == 0.0);
  CHECK(phi(0.7, p) == 0.0);
  CHECK(v_weight(0.4, 0.1, p) == doctest::Approx(psi(0.4, p) * phi(0.1, p)));
  CHECK(v_weight(0.6, 0.1, p) == 0.0);
}

TEST_CASE("ibp integrand is (phi rho)'/rho") {
  const FieldParams p{0.5, 2.125};
  const LevyMeasure m = StableMeasure(1.5, 0.8);
  for (double xi : {-0.4, -0.05, 0.003, 0.2, 0.3, 0.45}) {
    const double fd = testing::central_diff([&](double x) { return phi(x, p) * density(m, x, p.delta); }, xi,
                                            1e-7 * std::abs(xi));
    CHECK(ibp_integrand(m, xi, p) == doctest::Approx(fd / density(m, xi, p.delta)).epsilon(1e-6));
  }
  CHECK_THROWS_AS(ibp_integrand(m, 0.0, p), DomainError);
  CHECK_THROWS_AS(ibp_integrand(m, 0.5, p), DomainError);
}

TEST_CASE("one-sided integral of g rho equals the boundary term") {
  // int_eps^delta (phi rho)' = -phi(eps) rho(eps); the two sides cancel.
  const FieldParams p{0.5, 2.125};
  const LevyMeasure m = StableMeasure(1.5);
  const double eps = 0.01;
  const double pos = quad::integrate_dyadic(
      [&](double x) { return ibp_integrand(m, x, p) * density(m, x, p.delta); }, eps, p.delta * (1 - 1e-15), 1e-12);
  const double neg = quad::integrate_dyadic(
      [&](double x) { return ibp_integrand(m, -x, p) * density(m, -x, p.delta); }, eps, p.delta * (1 - 1e-15), 1e-12);
  CHECK(pos == doctest::Approx(-phi(eps, p) * density(m, eps, p.delta)).epsilon(1e-8));
  CHECK(pos + neg == doctest::Approx(0.0).scale(1e-9));
}

TEST_CASE("jump_field_values agrees with the separate functions") {
  const FieldParams p{0.5, 2.05};
  const LevyMeasure st = StableMeasure(1.2);
  TabulatedMeasure tab;
  tab.density = [](double x) { return std::pow(std::abs(x), -2.2); };
  tab.log_deriv = [](double x) { return -2.2 / x; };
  tab.tail_cdf = [](double e) { return 2 * std::pow(e, -1.2) / 1.2; };
  const LevyMeasure tm = tab;
  for (double s : {0.1, 0.3, 0.45, 0.6}) {
    for (double xi : {-0.4, -0.01, 0.1, 0.3, 0.49, 0.8}) {
      for (const LevyMeasure* m : {&st, &tm}) {
        const auto v = jump_field_values(*m, s, xi, p);
        if (std::abs(xi) >= p.delta || psi(s, p) == 0.0) {
          CHECK(v.psi_s * v.phi == 0.0);
          CHECK(v.g == 0.0);
          continue;
        }
        CHECK(v.psi_s == doctest::Approx(psi(s, p)));
        CHECK(v.phi == doctest::Approx(phi(xi, p)).epsilon(1e-13));
        CHECK(v.dphi == doctest::Approx(phi_prime(xi, p)).epsilon(1e-12));
        CHECK(v.g == doctest::Approx(ibp_integrand(*m, xi, p)).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("batched jump_field_values matches the scalar form") {
  const FieldParams p = FieldParams::from(default_stable_params(1.5));
  TabulatedMeasure tab;
  tab.density = [](double x) { return std::pow(std::abs(x), -2.5); };
  tab.log_deriv = [](double x) { return -2.5 / x; };
  tab.tail_cdf = [](double e) { return 2 * std::pow(e, -1.5) / 1.5; };
  const LevyMeasure st = StableMeasure(1.5);
  const LevyMeasure tm = tab;
  // More than one internal chunk, times across the whole step of psi and past
  // delta, sizes on both sides of delta/2 and delta.
  std::vector<double> s, xi;
  for (int i = 0; i < 700; ++i) {
    s.push_back(0.6 * i / 699.0);
    const double mag = 1e-3 * std::pow(600.0, (i * 37 % 700) / 699.0);
    xi.push_back(i % 3 == 0 ? -mag : mag);
  }
  s[5] = 0.25;
  s[6] = 0.5;
  xi[7] = 0.25;
  for (const LevyMeasure* m : {&st, &tm}) {
    std::vector<JumpFieldValues> out(s.size());
    jump_field_values(*m, s, xi, p, out);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto v = jump_field_values(*m, s[i], xi[i], p);
      CAPTURE(i);
      CHECK(out[i].psi_s == doctest::Approx(v.psi_s).epsilon(1e-13).scale(1e-300));
      CHECK(out[i].phi == doctest::Approx(v.phi).epsilon(1e-13).scale(1e-300));
      CHECK(out[i].dphi == doctest::Approx(v.dphi).epsilon(1e-13).scale(1e-300));
      CHECK(out[i].g == doctest::Approx(v.g).epsilon(1e-12).scale(1e-300));
      CHECK((out[i].psi_s == 0.0) == (v.psi_s == 0.0));
    }
  }
  std::vector<JumpFieldValues> short_out(3);
  CHECK_THROWS_AS(jump_field_values(st, s, xi, p, short_out), DomainError);
}

TEST_CASE("field parameters must agree with the measure parameters") {
  MeasureParams mp = default_stable_params(1.5);
  CHECK_NOTHROW(check_consistent(FieldParams::from(mp), mp));
  CHECK_THROWS_AS(check_consistent(FieldParams{0.4, mp.kappa}, mp), ConfigError);
  CHECK_THROWS_AS((FieldParams{0.5, 1.0}).validate(), ConfigError);
}
