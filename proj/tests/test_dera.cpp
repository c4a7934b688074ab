#include <cmath>
#include <memory>

#include "doctest.h"
#include "lsor/dera.hpp"
#include "lsor/errors.hpp"
#include "support.hpp"

using namespace lsor;
using namespace lsor::dera;
using lsor::testing::Gen;

namespace {

const ProtectionMemory kFresh{};

DeraParams nominal() {
  DeraParams p = DeraParams::reference();
  p.Vref0 = 1.0;
  return p;
}

DeraReducedState random_reduced(Gen& g) {
  return {g.uniform(0.6, 1.1), g.uniform(0.0, 1.0), g.uniform(0.98, 1.02), g.uniform(0.0, 1.0)};
}

DeraInputs random_input(Gen& g) { return {g.uniform(0.5, 1.1), g.uniform(0.98, 1.02)}; }

DeraFullState random_full(Gen& g) {
  DeraFullState s;
  for (double& v : s.S) v = g.uniform(-0.5, 1.1);
  s.S[0] = g.uniform(0.5, 1.1);
  return s;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(DeraParams::reference().validate());
  DeraParams p = DeraParams::reference();
  p.Trf = 0.01;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = DeraParams::reference();
  p.Pmin = 2.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = DeraParams::reference();
  p.Tg = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("initialized state is an equilibrium") {
  const DeraInitialization init = dera_initialize({1.0, 1.0}, DeraParams::reference(), 0.5, 0.0);
  CHECK(dera_full_rhs(init.state, {1.0, 1.0}, init.params, kFresh).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(init.params.Vref0 == 1.0);
  CHECK(init.state.S[9] == doctest::Approx(0.5));
  CHECK(init.state.S[3] == doctest::Approx(0.0).scale(1.0));

  const DeraInitialization q = dera_initialize({1.02, 1.0}, DeraParams::reference(), 0.7, 0.2);
  CHECK(dera_full_rhs(q.state, {1.02, 1.0}, q.params, kFresh).cwiseAbs().maxCoeff() <= 1e-9);
  const DeraPower pw = dera_outputs(q.state.S[3], q.state.S[9], {1.02, 1.0});
  CHECK(pw.P == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(pw.Q == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("zero dispatch gives a zero-output equilibrium") {
  const DeraInitialization init = dera_initialize({1.0, 1.0}, DeraParams::reference(), 0.0, 0.0);
  CHECK(init.state.S[8] == 0.0);
  CHECK(init.state.S[9] == 0.0);
  CHECK(dera_full_rhs(init.state, {1.0, 1.0}, init.params, kFresh).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("infeasible dispatch is reported") {
  CHECK_THROWS_AS(dera_initialize({1.0, 1.0}, DeraParams::reference(), 1.5, 0.0), InitializationFailure);
  try {
    dera_initialize({1.0, 1.0}, DeraParams::reference(), 1.0, -1.1);
    FAIL("expected InitializationFailure");
  } catch (const InitializationFailure& e) {
    CHECK(std::string(e.what()).find("sat") != std::string::npos);
  }
}

TEST_CASE("first-order lags") {
  DeraFullState s;
  s.S[0] = 1.0;
  CHECK(dera_full_rhs(s, {0.8, 1.0}, nominal(), kFresh)[0] == doctest::Approx(-2.0));
  CHECK(dera_reduced_rhs({1.0, 0, 1.0, 0}, {0.8, 1.0}, nominal())[0] == doctest::Approx(-2.0));
}

TEST_CASE("power order is held with the frequency loop off") {
  Gen g(51);
  for (int i = 0; i < lsor::testing::kCases; ++i)
    CHECK(dera_full_rhs(random_full(g), random_input(g), nominal(), kFresh)[7] == 0.0);
}

TEST_CASE("reduced model") {
  Gen g(52);
  for (int i = 0; i < lsor::testing::kCases; ++i) {
    const DeraInputs u = random_input(g);
    const double x4 = g.uniform(0, 1);
    CHECK(dera_reduced_rhs({u.Vt, x4, u.Freq, x4}, u, nominal()) == Vector::Zero(4));
    CHECK(dera_reduced_rhs(random_reduced(g), u, nominal())[3] == 0.0);
  }
}

TEST_CASE("gamma") {
  DeraParams p = nominal();
  CHECK(dera_gamma({0.98, 0.5, 1.0, 0.5}, p) == 0.0);
  CHECK(dera_gamma({0.9, 0.5, 1.0, 0.5}, p) == doctest::Approx(0.25).epsilon(1e-12));
  p.pfaref = std::atan(0.3287);
  CHECK(dera_gamma({1.0, 0.5, 1.0, 0.5}, p) == doctest::Approx(0.16435).epsilon(1e-12));
  CHECK(dera_gamma({0.9, 0.5, 1.0, 0.5}, p) == doctest::Approx(0.25 + 0.3287 * 0.5 / 0.9).epsilon(1e-12));
}

TEST_CASE("reconstructed currents") {
  const DeraParams p = nominal();
  const DeraBoundaryState zero;
  const DeraReducedState x{1.0, 0.5, 1.0, 0.5};
  const DeraCurrents c = dera_currents({0.9, 0.5, 1.0, 0.5}, zero, {0.9, 1.0}, p, kFresh);
  CHECK(c.iq == doctest::Approx(dera_gamma({0.9, 0.5, 1.0, 0.5}, p)));

  const DeraCurrents off = dera_currents({0.44, 0.5, 1.0, 0.5}, zero, {0.44, 1.0}, p, kFresh);
  CHECK(off.iq == 0.0);
  CHECK(off.id == 0.0);

  DeraBoundaryState y;
  y.y[5] = 0.01;
  CHECK(dera_currents(x, y, {1.0, 1.0}, p, kFresh).id == doctest::Approx(0.51));
}

TEST_CASE("power outputs") {
  CHECK(dera_outputs(0, 0, {1.0, 1.0}).P == 0.0);
  CHECK(dera_outputs(0, 0, {1.0, 1.0}).Q == 0.0);
  CHECK(dera_outputs(0.0, 0.5, {1.0, 1.0}).P == 0.5);
  Gen g(53);
  for (int i = 0; i < 100; ++i) {
    const double iq = g.uniform(-1, 1), id = g.uniform(-1, 1);
    const DeraInputs u = random_input(g);
    const DeraPower a = dera_outputs(iq, id, u), b = dera_outputs(-iq, id, u);
    CHECK(b.P == a.P);
    CHECK(b.Q == -a.Q);
  }
}

TEST_CASE("boundary layer rows") {
  Gen g(54);
  const DeraParams p = nominal();
  for (int i = 0; i < lsor::testing::kCases; ++i) {
    const DeraReducedState x = random_reduced(g);
    const DeraInputs u = random_input(g);
    CHECK(dera_boundary_rhs({}, x, u, p, kFresh).cwiseAbs().maxCoeff() <= 1e-10);
    DeraBoundaryState y;
    for (double& v : y.y) v = g.uniform(-0.5, 0.5);
    const Vector d = dera_boundary_rhs(y, x, u, p, kFresh);
    CHECK(d[0] == -y.y[0]);
    CHECK(d[2] == -y.y[2]);
    CHECK(d[3] == -y.y[3]);
    CHECK(d[4] == -y.y[4]);
  }
}

TEST_CASE("generic reduction equals the closed-form DER_A models") {
  Gen g(55);
  for (bool closed : {true, false}) {
    const auto mem = std::make_shared<const ProtectionMemory>();
    const spt::TwoTimeScaleSystem sys = dera_two_time_scale(nominal(), mem, closed);
    const odesolve::OdeRhs red = spt::reduced_rhs(sys);
    for (int i = 0; i < 100; ++i) {
      const DeraReducedState x = random_reduced(g);
      const DeraInputs u = random_input(g);
      const Vector a = red(0.0, x.to_vector(), u.to_vector());
      CHECK((a - dera_reduced_rhs(x, u, nominal())).cwiseAbs().maxCoeff() <= (closed ? 1e-12 : 1e-9));
      const odesolve::OdeRhs bl = spt::boundary_layer_rhs(sys, x.to_vector(), u.to_vector());
      DeraBoundaryState y;
      for (double& v : y.y) v = g.uniform(-0.5, 0.5);
      const Vector b = bl(0.0, y.to_vector(), u.to_vector());
      CHECK((b - dera_boundary_rhs(y, x, u, nominal(), *mem)).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("closed-form quasi-steady values zero the fast block") {
  Gen g(56);
  for (bool pq : {false, true}) {
    DeraParams p = nominal();
    p.flags.pq_flag = pq;
    const spt::TwoTimeScaleSystem sys = dera_two_time_scale(p, nullptr);
    for (int i = 0; i < lsor::testing::kCases; ++i) {
      const Vector x = random_reduced(g).to_vector();
      const Vector u = random_input(g).to_vector();
      CHECK(spt::qss_residual(sys, x, u, sys.qss(x, u)) <= 1e-12);
    }
  }
}

TEST_CASE("current limits: Q priority and P priority") {
  DeraParams p = nominal();
  DeraFullState s;
  s.S[0] = 1.0;
  s.S[3] = 1.0;
  s.S[4] = 1.0;
  s.S[8] = 1.1;
  s.S[9] = 0.0;
  // d-current target under Q priority: sqrt(Imax^2 - iq^2).
  const double target_q = dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[9] * p.Tg + s.S[9];
  CHECK(target_q == doctest::Approx(std::sqrt(1.44 - 1.0)));
  p.flags.pq_flag = true;
  const double target_p = dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[9] * p.Tg + s.S[9];
  CHECK(target_p == doctest::Approx(1.1));
  // q-current target under P priority with id = 1.1.
  s.S[2] = 2.0;
  s.S[9] = 1.1;
  const double iq_target = dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[3] * p.Tg + s.S[3];
  CHECK(iq_target == doctest::Approx(std::sqrt(1.44 - 1.21)));
}

TEST_CASE("current direction limit follows the type flag") {
  DeraParams p = nominal();
  p.Pmin = -1.0;
  DeraFullState s;
  s.S[0] = 1.0;
  s.S[4] = 1.0;
  s.S[8] = -0.5;
  const double with_storage = dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[9] * p.Tg;
  CHECK(with_storage == doctest::Approx(-0.5));
  p.flags.typeflag = false;
  CHECK(dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[9] * p.Tg == 0.0);
}

TEST_CASE("voltage trip gating") {
  DeraParams p = nominal();
  DeraFullState s;
  s.S[0] = 1.0;
  s.S[4] = 0.5;
  s.S[8] = 0.5;
  CHECK(dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[9] * p.Tg == doctest::Approx(0.25));
  p.flags.v_tripflag = false;
  CHECK(dera_full_rhs(s, {1.0, 1.0}, p, kFresh)[9] * p.Tg == doctest::Approx(0.5));
}

TEST_CASE("frequency loop cuts power on over-frequency") {
  DeraParams p = nominal();
  p.flags.freq_flag = true;
  const DeraInitialization init = dera_initialize({1.0, 1.0}, p, 0.5, 0.0);
  CHECK(dera_full_rhs(init.state, {1.0, 1.0}, init.params, kFresh).cwiseAbs().maxCoeff() <= 1e-9);
  DeraFullState s = init.state;
  s.S[5] = 1.01;
  const Vector d = dera_full_rhs(s, {1.0, 1.01}, init.params, kFresh);
  CHECK(d[6] == doctest::Approx(p.Kig * p.Ddn * (-(0.01 - 0.0006))));
  CHECK(d[7] == doctest::Approx(p.dPmin));
  CHECK_THROWS_AS(dera_two_time_scale(init.params, nullptr), DomainError);
}

TEST_CASE("partition of the DER_A time constants") {
  const spt::SlowFastPartition part = spt::identify_partition(dera_time_constants(nominal()));
  CHECK(part.slow_indices == std::vector<Eigen::Index>{0, 1, 5, 7});
  CHECK(part.fast_indices == std::vector<Eigen::Index>{2, 3, 4, 6, 8, 9});
  CHECK(part.epsilon() == doctest::Approx(0.01));
}

TEST_CASE("boundary layer decays exponentially from random starts") {
  Gen g(57);
  const DeraParams p = nominal();
  const auto mem = std::make_shared<const ProtectionMemory>();
  const spt::TwoTimeScaleSystem sys = dera_two_time_scale(p, mem);
  odesolve::SolverConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-13;
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_reduced(g).to_vector();
    const Vector u = random_input(g).to_vector();
    Vector y0 = g.vector(6, -1, 1);
    y0 *= g.uniform(0.05, 0.5) / y0.norm();
    const auto tr = odesolve::integrate(spt::build_boundary_layer(sys, x, u, y0, 40.0), cfg);
    const spt::DecayFit fit = spt::estimate_decay(tr);
    CHECK(fit.a > 0.0);
  }
}

TEST_CASE("non-finite inputs raise NumericalBlowup") {
  DeraFullState s;
  s.S[2] = NAN;
  CHECK_THROWS_AS(dera_full_rhs(s, {1.0, 1.0}, nominal(), kFresh), NumericalBlowup);
}
