#include "example_setup.hpp"

#include <hetsync/errors.hpp>
#include <hetsync/random.hpp>
#include <hetsync/rate.hpp>

#include <doctest.h>

using namespace hetsync;

namespace {

std::vector<double> geometric(double c, double r, std::size_t n) {
  std::vector<double> s;
  for (std::size_t t = 0; t < n; ++t) s.push_back(c * std::pow(r, static_cast<double>(t)));
  return s;
}

}  // namespace

TEST_CASE("exact geometric series") {
  const RateEstimate e = estimate_rate(geometric(1.0, 0.8, 61), {0, 60});
  CHECK(std::abs(e.rate - 0.8) < 1e-12);
  CHECK(e.residual < 1e-12);
  CHECK(e.points == 61);
  CHECK(e.window.start == 0);
  CHECK(e.window.end == 60);
}

TEST_CASE("perturbed geometric series") {
  std::vector<double> s;
  for (int t = 0; t <= 60; ++t) s.push_back(3 * std::pow(0.8, t) * (1 + 0.01 * std::sin(t)));
  CHECK(std::abs(estimate_rate(s, {0, 60}).rate - 0.8) < 0.01);
}

TEST_CASE("floor and errors") {
  // Samples below 1e-13 of the first value are dropped.
  std::vector<double> s = geometric(1.0, 0.5, 30);
  s.push_back(1e-300);
  s.push_back(0.0);
  const RateEstimate e = estimate_rate(s, {0, 31});
  CHECK(e.points == 30);
  CHECK(std::abs(e.rate - 0.5) < 1e-12);
  CHECK_THROWS_AS(estimate_rate(s, {0, 3}), InvalidArgument);
  CHECK_THROWS_AS(estimate_rate(std::vector<double>(20, 0.0), {0, 19}), InvalidArgument);
  CHECK_THROWS_AS(estimate_rate(s, {5, 100}), InvalidArgument);
  CHECK_THROWS_AS(estimate_rate(s, {10, 5}), InvalidArgument);
}

TEST_CASE("ratio series") {
  for (double r : {0.3, 0.7, 0.95}) {
    for (double v : ratio_series(geometric(1.0, r, 100), r)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ratio_series(geometric(1.0, 0.5, 5), 1.0), InvalidArgument);
}

TEST_CASE("tail trend tests") {
  const std::vector<double> s = geometric(1.0, 0.8, 61);
  CHECK(tail_decreasing(ratio_series(s, 0.9), {20, 60}));
  CHECK_FALSE(tail_increasing(ratio_series(s, 0.9), {20, 60}));
  CHECK(tail_increasing(ratio_series(s, 0.7), {20, 60}));
  CHECK_FALSE(tail_decreasing(ratio_series(s, 0.7), {20, 60}));
  // One bad pair in a 30-sample tail is tolerated only above the 5% budget.
  std::vector<double> bumpy = geometric(1.0, 0.5, 101);
  bumpy[95] = bumpy[94] * 1.01;
  CHECK(tail_decreasing(bumpy, {0, 100}));
  bumpy[90] = bumpy[89] * 1.01;
  bumpy[85] = bumpy[84] * 1.01;
  CHECK_FALSE(tail_decreasing(bumpy, {0, 100}));
}

TEST_CASE("envelope test") {
  std::vector<double> osc;
  for (int t = 0; t < 100; ++t) osc.push_back(std::pow(0.9, t) * (t % 2 == 0 ? 2.0 : 1.0));
  CHECK(envelope_nonincreasing(osc, 0, 0.05));
  std::vector<double> grow = geometric(1.0, 1.01, 100);
  CHECK_FALSE(envelope_nonincreasing(grow, 0, 0.05));
  CHECK(envelope_nonincreasing(std::vector<double>(100, 1.0), 0, 0.0));
}

TEST_CASE("property: geometric input of any scale") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const double r = rng.uniform(0.05, 0.99);
    const double c = std::pow(10.0, rng.uniform(-8, 8));
    const std::size_t start = static_cast<std::size_t>(rng.integer(0, 4));
    // Keep the window above the 1e-13 relative floor.
    const auto reach = static_cast<std::size_t>(std::log(1e-12) / std::log(r));
    const std::size_t end = std::min<std::size_t>(start + 40, std::max(start + 5, reach));
    CAPTURE(seed);
    CHECK(std::abs(estimate_rate(geometric(c, r, 80), {start, end}).rate - r) < 1e-10);
  }
}

TEST_CASE("property: tail monotonicity is consistent across rates") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    // Two-mode series with a polynomial factor.
    const double a = rng.uniform(0.3, 0.9), b = rng.uniform(0.3, 0.9);
    std::vector<double> s;
    for (int t = 0; t <= 120; ++t) s.push_back(std::pow(a, t) + (1 + 0.1 * t) * std::pow(b, t));
    const Window w{40, 120};
    bool seen = false;
    for (double r = 0.3; r < 0.999; r += 0.01) {
      const bool dec = tail_decreasing(ratio_series(s, r), w);
      CAPTURE(seed);
      CAPTURE(r);
      if (seen) CHECK(dec);
      seen = seen || dec;
    }
  }
}

TEST_CASE("example: fitted rate sits above the bound and below every tested rate") {
  const Trajectory traj = setup::example_run(2024, 110);
  const RateEstimate early = estimate_rate(traj.sync_error, {20, 60});
  CHECK(early.rate >= 0.70);
  CHECK(early.rate <= 0.90);
  const RateEstimate late = estimate_rate(traj.sync_error, {60, 110});
  for (double r : {0.80, 0.85, 0.90, 0.95}) {
    CAPTURE(r);
    CHECK(late.rate <= r);
  }
  MESSAGE("fitted rate on [20,60] = " << early.rate << ", on [60,110] = " << late.rate);
}
