#include "doctest.h"
#include "levybel/quadrature.hpp"
#include "levybel/types.hpp"

#include <cmath>
#include <numbers>

using namespace levybel;

TEST_CASE("gauss-kronrod reproduces elementary integrals") {
  CHECK(quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(quad::integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0) ==
        doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
  // reversed limits flip the sign
  CHECK(quad::integrate([](double x) { return x * x; }, 1.0, 0.0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("integrable power singularity at zero is finite with the right value") {
  for (double p : {-0.5, -0.9, 0.3}) {
    const auto r = quad::integrate_to_zero([p](double x) { return std::pow(x, p); }, 0.5);
    CHECK(r.verdict == quad::Convergence::finite);
    CHECK(r.value == doctest::Approx(std::pow(0.5, p + 1) / (p + 1)).epsilon(1e-6));
  }
}

TEST_CASE("non-integrable power singularity is flagged infinite") {
  for (double p : {-1.0, -1.3, -2.0}) {
    const auto r = quad::integrate_to_zero([p](double x) { return std::pow(x, p); }, 0.5);
    CHECK(r.verdict == quad::Convergence::infinite);
  }
}

TEST_CASE("dyadic splitting handles a steep power law") {
  const double v = quad::integrate_dyadic([](double x) { return std::pow(x, -2.5); }, 1e-6, 1.0);
  CHECK(v == doctest::Approx((std::pow(1e-6, -1.5) - 1.0) / 1.5).epsilon(1e-10));
}

TEST_CASE("convergence verdict names") {
  CHECK(quad::to_string(quad::Convergence::finite) == "finite");
  CHECK(quad::to_string(quad::Convergence::infinite) == "infinite");
  CHECK(quad::to_string(quad::Convergence::inconclusive) == "inconclusive");
}
