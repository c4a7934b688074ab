#include <cmath>
#include <vector>

#include "doctest.h"
#include "lsor/errors.hpp"
#include "lsor/motor.hpp"
#include "support.hpp"

using namespace lsor;
using namespace lsor::motor;
using lsor::testing::Gen;

namespace {

MotorFullState random_full(Gen& g) {
  return {g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(0.0, 0.2)};
}

MotorReducedState random_reduced(Gen& g) { return {g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(0.0, 0.2)}; }

MotorInputs random_input(Gen& g) { return {g.uniform(0.0, 1.2), g.uniform(-0.3, 0.3)}; }

const MotorParams kAll[] = {MotorParams::motor_a(), MotorParams::motor_b(), MotorParams::motor_c()};

}  // namespace

TEST_CASE("embedded parameter sets") {
  const MotorParams b = MotorParams::motor_b(), c = MotorParams::motor_c();
  CHECK(MotorParams::motor_a().Tpp0 == 0.002);
  CHECK(b.Tpp0 == 0.0026);
  CHECK(c.H == 0.1);
  CHECK(c.Lpp == b.Lpp);
  for (const auto& p : kAll) CHECK_NOTHROW(p.validate());
  MotorParams bad;
  bad.H = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("origin is an equilibrium without voltage or load") {
  const Vector d = motor_full_rhs({}, {0.0, 0.0}, MotorParams::motor_a(), 0.0);
  CHECK(d == Vector::Zero(5));
  const Vector r = motor_reduced_rhs({}, {0.0, 0.0}, MotorParams::motor_a(), 0.0);
  CHECK(r == Vector::Zero(3));
}

TEST_CASE("locked-rotor currents of motor A") {
  const MotorOutputs o = motor_outputs(MotorFullState{}, {1.0, 0.0}, MotorParams::motor_a(), 0.0);
  CHECK(o.iq == doctest::Approx(0.04 / 0.008489).epsilon(1e-12));
  CHECK(o.id == doctest::Approx(0.083 / 0.008489).epsilon(1e-12));
  CHECK(o.iq == doctest::Approx(4.7120).epsilon(1e-4));
  CHECK(o.id == doctest::Approx(9.7773).epsilon(1e-4));
  CHECK(o.P == o.iq);
  CHECK(o.Q == o.id);
}

TEST_CASE("no voltage gives no power") {
  Gen g(41);
  for (int i = 0; i < 100; ++i) {
    const MotorOutputs o = motor_outputs(random_full(g), {0.0, 0.0}, MotorParams::motor_a(), 1.0);
    CHECK(o.P == 0.0);
    CHECK(o.Q == 0.0);
  }
}

TEST_CASE("P and Q are invariant under a rotation of the d-q frame") {
  Gen g(42);
  for (const auto& prm : kAll) {
    for (int i = 0; i < 100; ++i) {
      MotorFullState x = random_full(g);
      MotorInputs u = random_input(g);
      const MotorOutputs o = motor_outputs(x, u, prm, 1.0);
      const double th = g.uniform(-3.14, 3.14), c = std::cos(th), s = std::sin(th);
      const MotorInputs ur{c * u.Vq - s * u.Vd, s * u.Vq + c * u.Vd};
      MotorFullState xr = x;
      xr.Eq_pp = c * x.Eq_pp - s * x.Ed_pp;
      xr.Ed_pp = s * x.Eq_pp + c * x.Ed_pp;
      const MotorOutputs orot = motor_outputs(xr, ur, prm, 1.0);
      CHECK(orot.P == doctest::Approx(o.P).epsilon(1e-10).scale(1.0));
      CHECK(orot.Q == doctest::Approx(o.Q).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("slip is stationary when torques balance") {
  const MotorParams prm = MotorParams::motor_a();
  Gen g(43);
  for (int i = 0; i < 100; ++i) {
    MotorFullState x = random_full(g);
    x.s = 0.0;
    const MotorInputs u = random_input(g);
    const MotorOutputs o = motor_outputs(x, u, prm, 0.0);
    const double te = prm.p * x.Ed_pp * o.id + prm.q * x.Eq_pp * o.iq;
    const double tm0 = te / torque_curve(0.0, prm);
    CHECK(std::abs(motor_full_rhs(x, u, prm, tm0)[4]) <= 1e-12);
  }
}

TEST_CASE("constant-torque load curve of motor A") {
  const MotorParams prm = MotorParams::motor_a();
  for (double s = -0.5; s <= 1.0; s += 0.05) CHECK(torque_curve(s, prm) == 1.0);
}

TEST_CASE("closed-form quasi-steady values") {
  MotorParams deg = MotorParams::motor_a();
  deg.Lpp = deg.Lp;
  Gen g(44);
  for (int i = 0; i < 50; ++i) {
    const MotorReducedState x = random_reduced(g);
    const QssPair h = motor_qss_h(x, random_input(g), deg);
    CHECK(h.h1 == doctest::Approx(x.x1).epsilon(1e-14).scale(1.0));
    CHECK(h.h2 == doctest::Approx(x.x2).epsilon(1e-14).scale(1.0));
  }
  const QssPair a = motor_qss_h({1.0, 0.0, 0.0}, {0.0, 0.0}, MotorParams::motor_a());
  CHECK(a.h1 == doctest::Approx(0.0099 / 0.0116).epsilon(1e-12));
  CHECK(a.h1 == doctest::Approx(0.85345).epsilon(1e-5));
}

TEST_CASE("closed-form quasi-steady values zero the fast block") {
  Gen g(45);
  for (const auto& prm : kAll) {
    const spt::TwoTimeScaleSystem sys = motor_two_time_scale(prm, 1.0);
    for (int i = 0; i < 100; ++i) {
      const Vector x = random_reduced(g).to_vector();
      const Vector u = random_input(g).to_vector();
      CHECK(spt::qss_residual(sys, x, u, sys.qss(x, u)) <= 1e-10);
    }
  }
}

TEST_CASE("Newton root of the fast block equals the closed form") {
  const MotorParams prm = MotorParams::motor_a();
  const spt::TwoTimeScaleSystem generic = motor_two_time_scale(prm, 1.0, false);
  Vector x(3), u(2);
  x << 1.0, 0.0, 0.01;
  u << 1.0, 0.0;
  const Vector newton = spt::qss_solve(generic, x, u, Vector::Zero(2));
  const QssPair h = motor_qss_h(MotorReducedState::from_vector(x), MotorInputs::from_vector(u), prm);
  CHECK(std::abs(newton[0] - h.h1) <= 1e-9);
  CHECK(std::abs(newton[1] - h.h2) <= 1e-9);
}

TEST_CASE("generic reduction equals the closed-form reduced motor") {
  Gen g(46);
  for (const auto& prm : kAll) {
    for (bool closed : {true, false}) {
      const spt::TwoTimeScaleSystem sys = motor_two_time_scale(prm, 0.7, closed);
      const odesolve::OdeRhs generic = spt::reduced_rhs(sys);
      for (int i = 0; i < 100; ++i) {
        const MotorReducedState x = random_reduced(g);
        const MotorInputs u = random_input(g);
        const Vector a = generic(0.0, x.to_vector(), u.to_vector());
        const Vector b = motor_reduced_rhs(x, u, prm, 0.7);
        CHECK((a - b).cwiseAbs().maxCoeff() <= (closed ? 1e-12 : 1e-9) * (1.0 + b.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("initialization yields an equilibrium") {
  for (const auto& prm : kAll) {
    const MotorEquilibrium eq = motor_initialize({1.0, 0.0}, prm, 0.03);
    CHECK(eq.state.s == 0.03);
    CHECK(eq.tm0 > 0.0);
    CHECK(motor_full_rhs(eq.state, {1.0, 0.0}, prm, eq.tm0).cwiseAbs().maxCoeff() <= 1e-10);
    const MotorReducedEquilibrium red = motor_initialize_reduced({1.0, 0.0}, prm, 0.03);
    CHECK(motor_reduced_rhs(red.state, {1.0, 0.0}, prm, red.tm0).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("full equilibria approach reduced equilibria as Tpp0 shrinks") {
  for (const auto& prm : kAll) {
    std::vector<double> mismatch;
    for (double k : {1.0, 0.1, 0.01}) {
      MotorParams p = prm;
      p.Tpp0 = prm.Tpp0 * k;
      const MotorEquilibrium eq = motor_initialize({1.0, 0.0}, p, 0.03);
      const MotorReducedState proj{eq.state.Eq_p, eq.state.Ed_p, eq.state.s};
      mismatch.push_back(motor_reduced_rhs(proj, {1.0, 0.0}, p, eq.tm0).cwiseAbs().maxCoeff());
    }
    CHECK(mismatch[1] == doctest::Approx(0.1 * mismatch[0]).epsilon(0.2));
    CHECK(mismatch[2] == doctest::Approx(0.01 * mismatch[0]).epsilon(0.2));
  }
}

TEST_CASE("initialization without voltage is trivial") {
  const MotorEquilibrium eq = motor_initialize({0.0, 0.0}, MotorParams::motor_a(), 0.03);
  CHECK(eq.tm0 == 0.0);
  CHECK(eq.state.Eq_p == 0.0);
  CHECK(eq.state.Ed_p == 0.0);
  CHECK(eq.state.Eq_pp == 0.0);
  CHECK(eq.state.Ed_pp == 0.0);
}

TEST_CASE("non-finite states raise NumericalBlowup") {
  MotorFullState x;
  x.Eq_p = NAN;
  CHECK_THROWS_AS(motor_full_rhs(x, {1.0, 0.0}, MotorParams::motor_a(), 1.0), NumericalBlowup);
  CHECK_THROWS_AS(motor_reduced_rhs({INFINITY, 0, 0}, {1.0, 0.0}, MotorParams::motor_a(), 1.0), NumericalBlowup);
}

TEST_CASE("time constants partition into the subtransient pair") {
  for (const auto& prm : kAll) {
    const spt::SlowFastPartition p = spt::identify_partition(motor_time_constants(prm));
    CHECK(p.fast_indices == std::vector<Eigen::Index>{2, 3});
    CHECK(p.epsilon() == prm.Tpp0);
    CHECK(motor_two_time_scale(prm, 1.0).epsilon == prm.Tpp0);
  }
}

TEST_CASE("vector round trips") {
  Gen g(47);
  const MotorFullState x = random_full(g);
  const MotorFullState y = MotorFullState::from_vector(x.to_vector());
  CHECK(y.to_vector() == x.to_vector());
  CHECK_THROWS_AS(MotorFullState::from_vector(Vector::Zero(3)), DomainError);
  CHECK_THROWS_AS(MotorInputs::from_vector(Vector::Zero(3)), DomainError);
}
