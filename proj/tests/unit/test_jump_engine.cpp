#include "doctest.h"
#include "levybel/jump_engine.hpp"
#include "test_support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace levybel;

TEST_CASE("paths are sorted, truncated and reproducible") {
  const std::vector<LevyMeasure> ms{StableMeasure(1.5), StableMeasure(0.8), StableMeasure(1.2)};
  const JumpSimulator sim(ms, 0.7, 0.01);
  const JumpPath p = sim.simulate(RngSpec{5, 11, StreamTag::jumps});
  REQUIRE(p.events.size() > 50);
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    const auto& e = p.events[i];
    CHECK(std::abs(e.size) >= 0.01);
    CHECK(e.time > 0.0);
    CHECK(e.time <= 0.7);
    CHECK(e.coord >= 0);
    CHECK(e.coord < 3);
    if (i > 0) {
      const auto& f = p.events[i - 1];
      CHECK((f.time < e.time || (f.time == e.time && f.coord <= e.coord)));
    }
  }
  const JumpPath q = sim.simulate(RngSpec{5, 11, StreamTag::jumps});
  REQUIRE(q.events.size() == p.events.size());
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    CHECK(q.events[i].time == p.events[i].time);
    CHECK(q.events[i].size == p.events[i].size);
  }
  CHECK(simulate_path(ms, 0.7, 0.01, RngSpec{5, 12, StreamTag::jumps}).events.size() != 0);
}

TEST_CASE("chunked stable sampling follows the one-draw-at-a-time recipe") {
  // Reference: per coordinate in turn, draw a gap and then a size whose
  // discarded bit gives the sign; the stream carries on into the next one.
  const std::vector<double> alphas{1.5, 0.8, 1.2};
  const double T = 0.4, eps = 0.003;
  std::vector<LevyMeasure> ms;
  for (double a : alphas) ms.push_back(StableMeasure(a));
  const JumpSimulator sim(ms, T, eps);
  for (std::uint64_t path : {0u, 1u, 2u}) {
    const RngSpec spec{31, path, StreamTag::jumps};
    CounterRng gen(spec);
    std::vector<JumpEvent> ref;
    for (std::size_t j = 0; j < ms.size(); ++j) {
      const double inv_rate = 1.0 / tail_mass(ms[j], eps);
      double time = 0.0;
      for (;;) {
        time -= std::log(1.0 - gen.uniform()) * inv_rate;
        if (!(time <= T)) break;
        bool neg = false;
        const double u = gen.uniform(neg);
        const double r = eps * std::exp(-std::log(1.0 - u) / alphas[j]);
        ref.push_back(JumpEvent{time, static_cast<int>(j), neg ? -r : r});
      }
    }
    std::stable_sort(ref.begin(), ref.end(), [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
    const JumpPath p = sim.simulate(spec);
    REQUIRE(p.events.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CAPTURE(i);
      CHECK(p.events[i].coord == ref[i].coord);
      CHECK(p.events[i].time == doctest::Approx(ref[i].time).epsilon(1e-13));
      CHECK(p.events[i].size == doctest::Approx(ref[i].size).epsilon(1e-13));
    }
  }
}

TEST_CASE("per-coordinate counts are Poisson and times uniform") {
  const double alpha = 1.5, eps = 0.05, T = 1.0;
  const std::vector<LevyMeasure> ms{StableMeasure(alpha), StableMeasure(alpha)};
  const JumpSimulator sim(ms, T, eps);
  const double lam = 2.0 * std::pow(eps, -alpha) / alpha * T;
  CHECK(sim.intensity(0) == doctest::Approx(lam));
  const int n = 20000;
  std::vector<double> c0, c1, times;
  double cross = 0.0;
  for (int i = 0; i < n; ++i) {
    const JumpPath p = sim.simulate(RngSpec{1, static_cast<std::uint64_t>(i), StreamTag::jumps});
    int a = 0, b = 0;
    for (const auto& e : p.events) {
      (e.coord == 0 ? a : b)++;
      if (i < 200 && e.coord == 0) times.push_back(e.time);
    }
    c0.push_back(a);
    c1.push_back(b);
    cross += (a - lam) * (b - lam);
  }
  for (const auto* c : {&c0, &c1}) {
    const auto mv = testing::mean_var(*c);
    CHECK(std::abs(mv.mean - lam) < 4 * std::sqrt(lam / n));
    // var of the sample variance of a Poisson count is about (lam + 2 lam^2) / n
    CHECK(std::abs(mv.var - lam) < 4 * std::sqrt((lam + 2 * lam * lam) / n));
  }
  CHECK(std::abs(cross / n) < 4 * lam / std::sqrt(double(n)));  // independent coordinates
  const double ks = testing::ks_statistic(times, [T](double t) { return t / T; });
  CHECK(ks < 1.63 / std::sqrt(double(times.size())));
}

TEST_CASE("characteristic function of Z(1) matches the stable law") {
  const double alpha = 1.2, eps = 1e-4, t = 1.0;
  const std::vector<LevyMeasure> ms{StableMeasure(alpha)};
  const JumpSimulator sim(ms, t, eps);
  const int n = 2000;
  std::vector<double> z(n);
  for (int i = 0; i < n; ++i) z[i] = increment(sim.simulate(RngSpec{21, static_cast<std::uint64_t>(i)}), t, 0);
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  // int_0^inf (1 - cos r) r^(-1-alpha) dr = -Gamma(-alpha) cos(pi alpha / 2)
  const double c_alpha = -2.0 * boost::math::tgamma(-alpha) * std::cos(std::numbers::pi * alpha / 2);
  for (double u : {0.5, 1.0, 2.0}) {
    const double dropped = 2.0 * GK::integrate(
                                     [&](double r) { return (1 - std::cos(u * r)) * std::pow(r, -1 - alpha); }, 0.0,
                                     eps, 15, 1e-12);
    const double expected = std::exp(-t * (c_alpha * std::pow(u, alpha) - dropped));
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) c[i] = std::cos(u * z[i]);
    const auto mv = testing::mean_var(c);
    INFO("u=" << u << " empirical=" << mv.mean << " expected=" << expected);
    CHECK(std::abs(mv.mean - expected) <= 3 * std::sqrt(mv.var / n));
  }
}

TEST_CASE("increment sums jumps up to and including t") {
  JumpPath p;
  p.horizon = 1.0;
  p.dim = 2;
  p.drift_correction = {0.0, 0.5};
  p.events = {{0.1, 0, 0.3}, {0.2, 1, -0.2}, {0.5, 0, 1.0}, {0.9, 1, 0.4}};
  CHECK(increment(p, 0.5, 0) == doctest::Approx(1.3));
  CHECK(increment(p, 0.49, 0) == doctest::Approx(0.3));
  CHECK(increment(p, 1.0, 1) == doctest::Approx(0.2 + 0.5));
}

TEST_CASE("perturbation moves only coordinate k by eps V") {
  const FieldParams fp{0.5, 2.125};
  const JumpPath p = simulate_path({StableMeasure(1.5), StableMeasure(1.5)}, 0.8, 0.01, RngSpec{3, 4});
  const JumpPath q = perturb_path(p, 1, 0.01, fp);
  REQUIRE(q.events.size() == p.events.size());
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    const auto& a = p.events[i];
    const auto& b = q.events[i];
    CHECK(b.time == a.time);
    if (a.coord == 1) {
      CHECK(b.size == doctest::Approx(a.size + 0.01 * v_weight(a.time, a.size, fp)));
    } else {
      CHECK(b.size == a.size);
    }
  }
  CHECK_THROWS_AS(perturb_path(p, 0, 2.0, fp), DomainError);
}

TEST_CASE("path dump round-trips bit for bit") {
  const JumpPath p = simulate_path({StableMeasure(0.9), StableMeasure(1.7)}, 0.3, 0.02, RngSpec{77, 5});
  std::stringstream ss;
  write_path(ss, p);
  const JumpPath q = read_path(ss);
  CHECK(q.horizon == p.horizon);
  CHECK(q.eps_trunc == p.eps_trunc);
  CHECK(q.dim == p.dim);
  CHECK(q.master_seed == 77);
  CHECK(q.path_index == 5);
  REQUIRE(q.events.size() == p.events.size());
  for (std::size_t i = 0; i < p.events.size(); ++i) {
    CHECK(q.events[i].time == p.events[i].time);
    CHECK(q.events[i].coord == p.events[i].coord);
    CHECK(q.events[i].size == p.events[i].size);
  }
  std::istringstream bad("garbage\n");
  CHECK_THROWS_AS(read_path(bad), ConfigError);
}

TEST_CASE("simulator input validation") {
  CHECK_THROWS_AS(JumpSimulator({}, 1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(JumpSimulator({StableMeasure(1.0)}, 0.0, 0.1), ConfigError);
  CHECK_THROWS_AS(JumpSimulator({StableMeasure(1.0)}, 1.0, 0.0), ConfigError);
  TabulatedMeasure asym;
  asym.symmetric = false;
  asym.tail_cdf = [](double e) { return 1.0 / e; };
  asym.positive_tail = [](double e) { return 0.7 / e; };
  CHECK_THROWS_AS(JumpSimulator({LevyMeasure(asym)}, 1.0, 0.1), UnsupportedMeasureError);
  asym.compensator_drift = -0.3;
  const JumpSimulator ok({LevyMeasure(asym)}, 1.0, 0.1);
  const JumpPath p = ok.simulate(RngSpec{1, 2});
  CHECK(p.drift_correction.at(0) == doctest::Approx(-0.3));
}
