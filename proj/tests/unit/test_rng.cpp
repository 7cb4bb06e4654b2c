#include "doctest.h"
#include "levybel/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

using namespace levybel;

TEST_CASE("identical specs give identical streams") {
  CounterRng a(RngSpec{42, 17, StreamTag::jumps});
  CounterRng b(RngSpec{42, 17, StreamTag::jumps});
  for (int i = 0; i < 1000; ++i) CHECK(a() == b());
}

TEST_CASE("seed, path and tag all change the stream") {
  const auto first = [](RngSpec s) { return CounterRng(s)(); };
  std::set<std::uint64_t> seen{first({1, 0, StreamTag::jumps}), first({2, 0, StreamTag::jumps}),
                               first({1, 1, StreamTag::jumps}), first({1, 0, StreamTag::aux}),
                               first({1, 0, StreamTag::payoff})};
  CHECK(seen.size() == 5);
}

TEST_CASE("uniform draws: range, moments and lag-1 correlation") {
  CounterRng r(RngSpec{9, 3, StreamTag::aux});
  const int n = 1000000;
  double s = 0, s2 = 0, lag = 0, prev = 0.5;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
    lag += (u - 0.5) * (prev - 0.5);
    prev = u;
  }
  const double mean = s / n;
  CHECK(std::abs(mean - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(s2 / n - 1.0 / 3) < 5 * std::sqrt(4.0 / 45 / n));
  CHECK(std::abs(lag / n) < 5 * (1.0 / 12) / std::sqrt(double(n)));
}

TEST_CASE("seek and position address the stream") {
  CounterRng a(RngSpec{4, 2, StreamTag::jumps});
  std::vector<std::uint64_t> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(a());
  CHECK(a.position() == 10);
  CounterRng b(RngSpec{4, 2, StreamTag::jumps});
  b.seek(6);
  CHECK(b() == xs[6]);
  b.seek(0);
  CHECK(b() == xs[0]);
  CHECK(b.position() == 1);
}

TEST_CASE("uniform with a sign bit: same uniform, fair sign") {
  CounterRng a(RngSpec{8, 1, StreamTag::aux});
  CounterRng b(RngSpec{8, 1, StreamTag::aux});
  const int n = 200000;
  int neg = 0;
  for (int i = 0; i < n; ++i) {
    bool bit = false;
    const double u = a.uniform(bit);
    REQUIRE(u == b.uniform());
    neg += bit;
  }
  CHECK(std::abs(neg - n / 2) < 4 * std::sqrt(n / 4.0));  // 4 sigma binomial
}

TEST_CASE("works as a UniformRandomBitGenerator") {
  static_assert(CounterRng::min() == 0);
  static_assert(CounterRng::max() == ~std::uint64_t{0});
}
