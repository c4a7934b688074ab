#include <cmath>

#include "doctest.h"
#include "lsor/errors.hpp"
#include "lsor/numerics.hpp"
#include "support.hpp"

using namespace lsor;
using namespace lsor::numerics;
using lsor::testing::Gen;

TEST_CASE("saturate clamps to the limits") {
  CHECK(saturate(0.5, {-1, 1}) == 0.5);
  CHECK(saturate(2.0, {-1, 1}) == 1.0);
  CHECK(saturate(-1.3, {-1, 1}) == -1.0);
}

TEST_CASE("saturate is idempotent") {
  Gen g(11);
  for (int i = 0; i < lsor::testing::kCases; ++i) {
    const double a = g.uniform(-5, 5), b = g.uniform(-5, 5);
    const SatLimits lim{std::min(a, b), std::max(a, b)};
    const double x = g.uniform(-10, 10);
    CHECK(saturate(saturate(x, lim), lim) == saturate(x, lim));
  }
}

TEST_CASE("saturation limits out of order are rejected") {
  CHECK_THROWS_AS(SatLimits({1.0, -1.0}).validate(), DomainError);
}

TEST_CASE("deadband uses the offset convention") {
  CHECK(deadband(0.03, {-0.05, 0.05}) == 0.0);
  CHECK(deadband(0.10, {-0.05, 0.05}) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(deadband(-0.0006, {-0.0006, 0.0006}) == 0.0);
  CHECK(deadband(-0.25, {-0.05, 0.05}) == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("deadband is continuous at both edges") {
  Gen g(12);
  for (int i = 0; i < lsor::testing::kCases; ++i) {
    const DeadbandLimits db{-g.uniform(0, 1), g.uniform(0, 1)};
    for (double edge : {db.db_lo, db.db_hi}) {
      CHECK(std::abs(deadband(edge + 1e-12, db)) <= 2e-12);
      CHECK(std::abs(deadband(edge - 1e-12, db)) <= 2e-12);
    }
  }
}

TEST_CASE("deadband limits must straddle zero") {
  CHECK_THROWS_AS(DeadbandLimits({0.1, 0.2}).validate(), DomainError);
}

TEST_CASE("protection curve break-points") {
  const VoltageProtectionParams vp;
  const ProtectionMemory fresh;
  CHECK(protection_multiplier(1.0, vp, fresh) == 1.0);
  CHECK(protection_multiplier(0.44, vp, fresh) == 0.0);
  CHECK(protection_multiplier(0.465, vp, fresh) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(protection_curve(1.175, vp) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(protection_curve(1.3, vp) == 0.0);
}

TEST_CASE("protection multiplier stays in [0, 1]") {
  Gen g(13);
  const VoltageProtectionParams vp;
  ProtectionMemory mem;
  double t = 0.0;
  for (int i = 0; i < 2000; ++i) {
    t += g.uniform(0.0, 0.05);
    const double v = g.uniform(0.0, 1.4);
    const ProtectionResult r = voltage_protection(v, t, vp, mem);
    CHECK(r.multiplier >= 0.0);
    CHECK(r.multiplier <= 1.0);
    const double m = protection_multiplier(v, vp, r.memory);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
    mem = r.memory;
  }
}

TEST_CASE("protection curve is continuous in voltage") {
  const VoltageProtectionParams vp;
  for (double v = 0.3; v < 1.3; v += 1e-3)
    CHECK(std::abs(protection_curve(v + 1e-9, vp) - protection_curve(v, vp)) <= 1e-7);
}

TEST_CASE("latched level never rises during an excursion") {
  Gen g(14);
  const VoltageProtectionParams vp;
  for (int trial = 0; trial < 50; ++trial) {
    ProtectionMemory mem;
    double t = 0.0, prev_latched = 1.0;
    for (int i = 0; i < 200; ++i) {
      t += g.uniform(0.0, 0.02);
      const double v = g.uniform(0.40, 0.489);
      mem = voltage_protection(v, t, vp, mem).memory;
      CHECK(mem.latched <= prev_latched);
      prev_latched = mem.latched;
    }
  }
}

TEST_CASE("short dip recovers fully, long dip latches and partially recovers") {
  const VoltageProtectionParams vp;
  ProtectionMemory mem;
  mem = voltage_protection(0.465, 1.0, vp, mem).memory;
  mem = voltage_protection(0.465, 1.1, vp, mem).memory;
  CHECK(mem.latched == 1.0);
  mem = voltage_protection(1.0, 1.12, vp, mem).memory;
  CHECK(mem.available == 1.0);

  ProtectionMemory held;
  held = voltage_protection(0.465, 2.0, vp, held).memory;
  held = voltage_protection(0.465, 2.2, vp, held).memory;
  CHECK(held.latched == doctest::Approx(0.5));
  CHECK(protection_multiplier(0.48, vp, held) == doctest::Approx(0.5));
  const ProtectionResult back = voltage_protection(1.0, 2.3, vp, held);
  CHECK(back.multiplier == doctest::Approx(0.5 + 0.7 * 0.5));
}

TEST_CASE("input signal evaluation") {
  Vector one(1);
  one << 1.0;
  const InputSignal c = InputSignal::constant(one, 0.0, 5.0);
  CHECK(evaluate_input(c, 3.7)[0] == 1.0);

  Vector freq(1);
  freq << 60.0;
  const InputSignal f = InputSignal::constant(freq, 0.0, 5.0);
  for (double t : {0.0, 1.3, 5.0}) CHECK(f(t)[0] == 60.0);
}

TEST_CASE("input signal is pure and checks its horizon") {
  const InputSignal s([](double t) { return Vector::Constant(2, std::sin(t)); }, 0.0, 2.0, {1.5, 0.5, 1.5});
  CHECK(s.breakpoints() == std::vector<double>{0.5, 1.5});
  Gen g(15);
  for (int i = 0; i < lsor::testing::kCases; ++i) {
    const double t = g.uniform(0.0, 2.0);
    CHECK(s(t) == s(t));
  }
  CHECK_THROWS_AS(s(2.5), DomainError);
  CHECK_THROWS_AS(s(-0.1), DomainError);
  const InputSignal bad([](double) { return Vector::Constant(1, NAN); }, 0.0, 1.0);
  CHECK_THROWS_AS(bad(0.5), DomainError);
}
