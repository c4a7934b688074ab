#include "lsor/motor.hpp"

#include <cmath>
#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/newton.hpp"

namespace lsor::motor {

void MotorParams::validate() const {
  if (!(rs > 0.0)) throw DomainError("motor rs must be positive");
  if (!(Ls > Lp && Lp > Lpp && Lpp > 0.0)) throw DomainError("motor inductances need Ls > Lp > Lpp > 0");
  if (!(Tp0 > Tpp0 && Tpp0 > 0.0)) throw DomainError("motor time constants need Tp0 > Tpp0 > 0");
  if (!(H > 0.0)) throw DomainError("motor inertia H must be positive");
  if (!(omega0 > 0.0)) throw DomainError("motor omega0 must be positive");
}

MotorParams MotorParams::motor_a() { return MotorParams{}; }

MotorParams MotorParams::motor_b() {
  MotorParams m;
  m.rs = 0.03;
  m.Lp = 0.16;
  m.Lpp = 0.12;
  m.Tp0 = 0.1;
  m.Tpp0 = 0.0026;
  m.H = 1.0;
  m.Etrq = 2.0;
  return m;
}

MotorParams MotorParams::motor_c() {
  MotorParams m = motor_b();
  m.H = 0.1;
  return m;
}

Vector MotorFullState::to_vector() const {
  Vector v(5);
  v << Eq_p, Ed_p, Eq_pp, Ed_pp, s;
  return v;
}

MotorFullState MotorFullState::from_vector(const Vector& v) {
  if (v.size() != 5) throw DomainError("motor full state has 5 entries");
  return {v[0], v[1], v[2], v[3], v[4]};
}

Vector MotorReducedState::to_vector() const {
  Vector v(3);
  v << x1, x2, x3;
  return v;
}

MotorReducedState MotorReducedState::from_vector(const Vector& v) {
  if (v.size() != 3) throw DomainError("motor reduced state has 3 entries");
  return {v[0], v[1], v[2]};
}

Vector MotorInputs::to_vector() const {
  Vector v(2);
  v << Vq, Vd;
  return v;
}

MotorInputs MotorInputs::from_vector(const Vector& v) {
  if (v.size() != 2) throw DomainError("motor input has 2 entries (Vq, Vd)");
  return {v[0], v[1]};
}

double torque_curve(double slip, const MotorParams& prm) {
  const double w = 1.0 - slip;
  return prm.A * w * w + prm.B * w + prm.C0 + prm.D * std::pow(w, prm.Etrq);
}

namespace {

struct Currents {
  double id;
  double iq;
};

// Stator currents behind an impedance rs + jL with internal EMF (eq, ed).
Currents stator_currents(double eq, double ed, const MotorInputs& u, double rs, double l) {
  const double den = rs * rs + l * l;
  const double a = u.Vq + eq;
  const double b = u.Vd + ed;
  return {(rs * b + l * a) / den, (rs * a - l * b) / den};
}

void require_finite(std::initializer_list<double> values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw NumericalBlowup(std::string("non-finite value in ") + what);
}

}  // namespace

Vector motor_full_rhs(const MotorFullState& x, const MotorInputs& u, const MotorParams& prm,
                      double tm0) {
  require_finite({x.Eq_p, x.Ed_p, x.Eq_pp, x.Ed_pp, x.s, u.Vq, u.Vd, tm0}, "motor full model");
  const auto [id, iq] = stator_currents(x.Eq_pp, x.Ed_pp, u, prm.rs, prm.Lpp);
  const double Tp0 = prm.Tp0, Tpp0 = prm.Tpp0;
  const double ws = prm.omega0 * x.s;
  const double k_emf = (Tp0 - Tpp0) / (Tp0 * Tpp0);
  const double k_cur = (Tpp0 * (prm.Ls - prm.Lp) + Tp0 * (prm.Lp - prm.Lpp)) / (Tp0 * Tpp0);
  const double TL = tm0 * torque_curve(x.s, prm);

  Vector dx(5);
  dx[0] = (-x.Eq_p - id * (prm.Ls - prm.Lp) - x.Ed_p * ws * Tp0) / Tp0;
  dx[1] = (-x.Ed_p + iq * (prm.Ls - prm.Lp) + x.Eq_p * ws * Tp0) / Tp0;
  dx[2] = k_emf * x.Eq_p - k_cur * id - x.Eq_pp / Tpp0 - ws * x.Ed_pp;
  dx[3] = k_emf * x.Ed_p + k_cur * iq - x.Ed_pp / Tpp0 + ws * x.Eq_pp;
  dx[4] = -(prm.p * x.Ed_pp * id + prm.q * x.Eq_pp * iq - TL) / (2.0 * prm.H);
  if (!dx.allFinite()) throw NumericalBlowup("motor full model produced a non-finite derivative");
  return dx;
}

QssPair motor_qss_h(const MotorReducedState& x, const MotorInputs& u, const MotorParams& prm) {
  const double rs = prm.rs, Lp = prm.Lp, Lpp = prm.Lpp;
  const double den = rs * rs + Lp * Lp;
  const double gap = Lp - Lpp;
  const double diag = Lp * Lpp + rs * rs;
  const double h1 = (diag * x.x1 - gap * rs * x.x2 - gap * Lp * u.Vq - gap * rs * u.Vd) / den;
  const double h2 = (gap * rs * x.x1 + diag * x.x2 + gap * rs * u.Vq - gap * Lp * u.Vd) / den;
  return {h1, h2};
}

Vector motor_reduced_rhs(const MotorReducedState& x, const MotorInputs& u, const MotorParams& prm,
                         double tm0) {
  require_finite({x.x1, x.x2, x.x3, u.Vq, u.Vd, tm0}, "motor reduced model");
  const auto [h1, h2] = motor_qss_h(x, u, prm);
  const auto [id, iq] = stator_currents(x.x1, x.x2, u, prm.rs, prm.Lp);
  const double TL = tm0 * torque_curve(x.x3, prm);
  const double coupling = prm.omega0 * prm.Tp0 * x.x3;

  Vector dx(3);
  dx[0] = (-x.x1 - id * (prm.Ls - prm.Lp) - coupling * x.x2) / prm.Tp0;
  dx[1] = (-x.x2 + iq * (prm.Ls - prm.Lp) + coupling * x.x1) / prm.Tp0;
  dx[2] = (TL - prm.p * h2 * id - prm.q * h1 * iq) / (2.0 * prm.H);
  if (!dx.allFinite()) throw NumericalBlowup("motor reduced model produced a non-finite derivative");
  return dx;
}

namespace {

MotorOutputs assemble_outputs(Currents c, const MotorInputs& u, double TL, double tm0) {
  MotorOutputs out;
  out.id = c.id;
  out.iq = c.iq;
  out.P = u.Vd * c.id + u.Vq * c.iq;
  out.Q = u.Vq * c.id - u.Vd * c.iq;
  out.TL = TL;
  out.Tm0 = tm0;
  return out;
}

}  // namespace

MotorOutputs motor_outputs(const MotorFullState& x, const MotorInputs& u, const MotorParams& prm,
                           double tm0) {
  const Currents c = stator_currents(x.Eq_pp, x.Ed_pp, u, prm.rs, prm.Lpp);
  return assemble_outputs(c, u, tm0 * torque_curve(x.s, prm), tm0);
}

MotorOutputs motor_outputs(const MotorReducedState& x, const MotorInputs& u,
                           const MotorParams& prm, double tm0) {
  const Currents c = stator_currents(x.x1, x.x2, u, prm.rs, prm.Lp);
  return assemble_outputs(c, u, tm0 * torque_curve(x.x3, prm), tm0);
}

namespace {

[[noreturn]] void init_failure(const NewtonResult& r, const char* which) {
  std::ostringstream os;
  os << which << " initialization did not converge; final residual " << r.residual_norm;
  throw InitializationFailure(os.str());
}

}  // namespace

MotorEquilibrium motor_initialize(const MotorInputs& u0, const MotorParams& prm, double slip) {
  prm.validate();
  const ResidualFn residual = [&](const Vector& v) {
    MotorFullState st{v[0], v[1], v[2], v[3], slip};
    return motor_full_rhs(st, u0, prm, v[4]);
  };
  NewtonResult r;
  try {
    r = damped_newton(residual, Vector::Zero(5));
  } catch (const SingularJacobian& e) {
    throw InitializationFailure(std::string("motor initialization: ") + e.what());
  }
  if (!r.converged) init_failure(r, "motor");
  const Vector& v = r.solution;
  return {{v[0], v[1], v[2], v[3], slip}, v[4]};
}

MotorReducedEquilibrium motor_initialize_reduced(const MotorInputs& u0, const MotorParams& prm,
                                                 double slip) {
  prm.validate();
  const ResidualFn residual = [&](const Vector& v) {
    return motor_reduced_rhs({v[0], v[1], slip}, u0, prm, v[2]);
  };
  NewtonResult r;
  try {
    r = damped_newton(residual, Vector::Zero(3));
  } catch (const SingularJacobian& e) {
    throw InitializationFailure(std::string("reduced motor initialization: ") + e.what());
  }
  if (!r.converged) init_failure(r, "reduced motor");
  const Vector& v = r.solution;
  return {{v[0], v[1], slip}, v[2]};
}

spt::TwoTimeScaleSystem motor_two_time_scale(const MotorParams& prm, double tm0,
                                             bool closed_form_qss) {
  prm.validate();
  spt::TwoTimeScaleSystem sys;
  sys.dims = {3, 2, 2};
  sys.epsilon = prm.Tpp0;
  sys.f = [prm, tm0](const Vector& x, const Vector& z, const Vector& u, double) -> Vector {
    const MotorFullState st{x[0], x[1], z[0], z[1], x[2]};
    const Vector d = motor_full_rhs(st, MotorInputs::from_vector(u), prm, tm0);
    Vector out(3);
    out << d[0], d[1], d[4];
    return out;
  };
  // Fast rows multiplied through by the subtransient time constant, which is
  // replaced by eps.
  sys.g = [prm](const Vector& x, const Vector& z, const Vector& u, double eps) -> Vector {
    const MotorInputs in = MotorInputs::from_vector(u);
    const auto [id, iq] = stator_currents(z[0], z[1], in, prm.rs, prm.Lpp);
    const double lag = 1.0 - eps / prm.Tp0;
    const double k_cur = eps * (prm.Ls - prm.Lp) / prm.Tp0 + (prm.Lp - prm.Lpp);
    const double ws = eps * prm.omega0 * x[2];
    Vector out(2);
    out[0] = lag * x[0] - k_cur * id - z[0] - ws * z[1];
    out[1] = lag * x[1] + k_cur * iq - z[1] + ws * z[0];
    return out;
  };
  if (closed_form_qss) {
    sys.qss = [prm](const Vector& x, const Vector& u) -> Vector {
      const QssPair h = motor_qss_h(MotorReducedState::from_vector(x), MotorInputs::from_vector(u), prm);
      Vector out(2);
      out << h.h1, h.h2;
      return out;
    };
  }
  return sys;
}

Vector motor_time_constants(const MotorParams& prm) {
  Vector c(5);
  c << prm.Tp0, prm.Tp0, prm.Tpp0, prm.Tpp0, prm.H;
  return c;
}

}  // namespace lsor::motor
