#include "lsor/dera.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "lsor/errors.hpp"
#include "lsor/newton.hpp"

namespace lsor::dera {

using numerics::DeadbandLimits;
using numerics::SatLimits;
using numerics::deadband;
using numerics::saturate;

void DeraParams::validate() const {
  for (double tc : {Trv, Tp, Tiq, Tg, Tv, Trf, Tpord})
    if (!(tc > 0.0)) throw DomainError("DER_A time constants must be positive");
  if (Trf < 0.02) throw DomainError("DER_A Trf must be at least 0.02 s");
  if (!(Imax > 0.0)) throw DomainError("DER_A Imax must be positive");
  if (!(Iql1 <= Iqh1 && Pmin <= Pmax && dPmin <= dPmax && femin <= femax))
    throw DomainError("DER_A limit pairs must be ordered");
  if (!(sat1_floor > 0.0)) throw DomainError("DER_A voltage divisor floor must be positive");
  if (Vref0 < 0.0) throw DomainError("DER_A Vref0 must be non-negative");
  DeadbandLimits{dbd1, dbd2}.validate();
  DeadbandLimits{fdbd1, fdbd2}.validate();
  vp.validate();
}

DeraParams DeraParams::reference() { return DeraParams{}; }

Vector DeraFullState::to_vector() const { return Eigen::Map<const Vector>(S.data(), 10); }

DeraFullState DeraFullState::from_vector(const Vector& v) {
  if (v.size() != 10) throw DomainError("DER_A full state has 10 entries");
  DeraFullState s;
  for (int i = 0; i < 10; ++i) s.S[i] = v[i];
  return s;
}

Vector DeraReducedState::to_vector() const {
  Vector v(4);
  v << x1, x2, x3, x4;
  return v;
}

DeraReducedState DeraReducedState::from_vector(const Vector& v) {
  if (v.size() != 4) throw DomainError("DER_A reduced state has 4 entries");
  return {v[0], v[1], v[2], v[3]};
}

Vector DeraBoundaryState::to_vector() const { return Eigen::Map<const Vector>(y.data(), 6); }

DeraBoundaryState DeraBoundaryState::from_vector(const Vector& v) {
  if (v.size() != 6) throw DomainError("DER_A boundary state has 6 entries");
  DeraBoundaryState b;
  for (int i = 0; i < 6; ++i) b.y[i] = v[i];
  return b;
}

Vector DeraInputs::to_vector() const {
  Vector v(2);
  v << Vt, Freq;
  return v;
}

DeraInputs DeraInputs::from_vector(const Vector& v) {
  if (v.size() != 2) throw DomainError("DER_A input has 2 entries (Vt, Freq)");
  return {v[0], v[1]};
}

namespace {

// sat1: voltage divisor with a floor.
double divisor(double v, const DeraParams& prm) { return std::max(v, prm.sat1_floor); }

// sat3 applied to the voltage-control term.
double voltage_control(double filtered_v, const DeraParams& prm) {
  return saturate(prm.Kqv * deadband(prm.Vref0 - filtered_v, {prm.dbd1, prm.dbd2}),
                  {prm.Iql1, prm.Iqh1});
}

// Reactive current command before sat2.
double reactive_command(double S2, double filtered_v, const DeraParams& prm) {
  return S2 + voltage_control(filtered_v, prm);
}

// Reactive integrator target (S2 steady value).
double reactive_target(double S0, double S1, const DeraParams& prm) {
  const double num = prm.flags.pf_flag ? std::tan(prm.pfaref) * S1 : prm.Qref;
  return num / divisor(S0, prm);
}

// sat2: reactive current limits, given the active current under P priority.
SatLimits iq_limits(double id, const DeraParams& prm) {
  double cap = prm.Imax;
  if (prm.flags.pq_flag) cap = std::sqrt(std::max(0.0, prm.Imax * prm.Imax - id * id));
  return {std::max(prm.Iql1, -cap), std::min(prm.Iqh1, cap)};
}

// sat9: active current limits, given the reactive current under Q priority.
SatLimits id_limits(double iq, const DeraParams& prm) {
  double cap = prm.Imax;
  if (!prm.flags.pq_flag) cap = std::sqrt(std::max(0.0, prm.Imax * prm.Imax - iq * iq));
  return {prm.flags.typeflag ? -cap : 0.0, cap};
}

double active_command(double S8, double S0, const DeraParams& prm) {
  return saturate(S8, {prm.Pmin, prm.Pmax}) / divisor(S0, prm);
}

double frequency_error_term(double S5, const DeraParams& prm) {
  const double dbf = deadband(prm.Freq_ref - S5, {prm.fdbd1, prm.fdbd2});
  return std::min(prm.Ddn * dbf, 0.0) + std::max(prm.Dup * dbf, 0.0);
}

double s6_rate(const std::array<double, 10>& S, const DeraInputs& u, const DeraParams& prm) {
  if (!prm.flags.freq_flag) return (S[7] - S[6]) / (prm.Tp * prm.Trf);
  const double pi_in =
      saturate(prm.Pref - S[1] + frequency_error_term(S[5], prm), {prm.femin, prm.femax});
  return prm.Kig * pi_in + prm.Kpg * (S[1] - S[8]) / prm.Tp +
         (prm.Gdn + prm.Gup) * (u.Freq - S[5]);
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalBlowup(std::string("non-finite value in ") + what);
}

}  // namespace

Vector dera_full_rhs(const DeraFullState& state, const DeraInputs& u, const DeraParams& prm,
                     const ProtectionMemory& mem) {
  const auto& S = state.S;
  Vector in(12);
  in << state.to_vector(), u.Vt, u.Freq;
  require_finite(in, "DER_A full model");

  const double vp = numerics::protection_multiplier(S[0], prm.vp, mem);
  const bool gated = prm.flags.v_tripflag;
  const double iq_cmd = saturate(reactive_command(S[2], S[0], prm), iq_limits(S[9], prm));
  const double id_cmd = saturate(active_command(S[8], S[0], prm), id_limits(S[3], prm));

  Vector d(10);
  d[0] = (u.Vt - S[0]) / prm.Trv;
  d[1] = (S[8] - S[1]) / prm.Tp;
  d[2] = (reactive_target(S[0], S[1], prm) - S[2]) / prm.Tiq;
  d[3] = ((gated ? iq_cmd * S[4] : iq_cmd) - S[3]) / prm.Tg;
  d[4] = (vp - S[4]) / prm.Tv;
  d[5] = (u.Freq - S[5]) / prm.Trf;
  d[6] = s6_rate(S, u, prm);
  d[7] = 0.0;
  if (prm.flags.freq_flag) {
    const bool inside = S[6] > prm.Pmin && S[6] < prm.Pmax;
    d[7] = inside ? saturate(d[6], {prm.dPmin, prm.dPmax}) : 0.0;
  }
  d[8] = (S[7] - S[8]) / prm.Tpord;
  d[9] = ((gated ? id_cmd * S[4] : id_cmd) - S[9]) / prm.Tg;
  require_finite(d, "DER_A full model derivative");
  return d;
}

ProtectionMemory dera_step_protection(double filtered_voltage, double t, const DeraParams& prm,
                                      const ProtectionMemory& mem) {
  return numerics::voltage_protection(filtered_voltage, t, prm.vp, mem).memory;
}

double dera_gamma(const DeraReducedState& x, const DeraParams& prm) {
  return reactive_command(reactive_target(x.x1, x.x2, prm), x.x1, prm);
}

namespace {

void require_reduced_configuration(const DeraParams& prm) {
  if (prm.flags.freq_flag)
    throw DomainError("the DER_A reduced model is defined for the frequency loop switched off");
}

struct QssParts {
  double vp, s2, s3, s4, s6, s8, s9;
};

QssParts qss_parts(const DeraReducedState& x, const DeraParams& prm, const ProtectionMemory& mem) {
  QssParts h{};
  h.vp = numerics::protection_multiplier(x.x1, prm.vp, mem);
  h.s2 = reactive_target(x.x1, x.x2, prm);
  h.s4 = h.vp;
  h.s6 = x.x4;
  h.s8 = x.x4;
  const double gate = prm.flags.v_tripflag ? h.vp : 1.0;
  const double gamma = dera_gamma(x, prm);
  const double p_cmd = active_command(h.s8, x.x1, prm);
  if (prm.flags.pq_flag) {
    h.s9 = saturate(p_cmd, id_limits(0.0, prm)) * gate;
    h.s3 = saturate(gamma, iq_limits(h.s9, prm)) * gate;
  } else {
    h.s3 = saturate(gamma, iq_limits(0.0, prm)) * gate;
    h.s9 = saturate(p_cmd, id_limits(h.s3, prm)) * gate;
  }
  return h;
}

}  // namespace

Vector dera_qss(const DeraReducedState& x, const DeraInputs&, const DeraParams& prm,
                const ProtectionMemory& mem) {
  require_reduced_configuration(prm);
  const QssParts h = qss_parts(x, prm, mem);
  Vector z(6);
  z << h.s2, h.s3, h.s4, h.s6, h.s8, h.s9;
  return z;
}

Vector dera_reduced_rhs(const DeraReducedState& x, const DeraInputs& u, const DeraParams& prm) {
  require_reduced_configuration(prm);
  Vector d(4);
  d[0] = (u.Vt - x.x1) / prm.Trv;
  d[1] = (x.x4 - x.x2) / prm.Tp;
  d[2] = (u.Freq - x.x3) / prm.Trf;
  d[3] = 0.0;
  require_finite(d, "DER_A reduced model derivative");
  return d;
}

Vector dera_boundary_rhs(const DeraBoundaryState& yb, const DeraReducedState& x,
                         const DeraInputs&, const DeraParams& prm, const ProtectionMemory& mem) {
  require_reduced_configuration(prm);
  const auto& y = yb.y;
  const QssParts h = qss_parts(x, prm, mem);
  const double gamma = dera_gamma(x, prm);
  const bool gated = prm.flags.v_tripflag;
  const double gate = gated ? h.vp : 1.0;
  const double gate_dev = gated ? h.vp + y[2] : 1.0;
  const double p_cmd = active_command(x.x4, x.x1, prm);
  const double p_cmd_dev = active_command(x.x4 + y[4], x.x1, prm);

  Vector d(6);
  d[0] = -y[0];
  d[1] = saturate(gamma + y[0], iq_limits(h.s9 + y[5], prm)) * gate_dev -
         saturate(gamma, iq_limits(h.s9, prm)) * gate - y[1];
  d[2] = -y[2];
  d[3] = -y[3];
  d[4] = -y[4];
  d[5] = saturate(p_cmd_dev, id_limits(h.s3 + y[1], prm)) * gate_dev -
         saturate(p_cmd, id_limits(h.s3, prm)) * gate - y[5];
  return d;
}

DeraCurrents dera_currents(const DeraReducedState& x, const DeraBoundaryState& y,
                           const DeraInputs&, const DeraParams& prm, const ProtectionMemory& mem) {
  require_reduced_configuration(prm);
  const QssParts h = qss_parts(x, prm, mem);
  return {h.s3 + y.y[1], h.s9 + y.y[5]};
}

DeraPower dera_outputs(double iq, double id, const DeraInputs& u) {
  return {u.Vt * id, -u.Vt * iq};
}

namespace {

[[noreturn]] void infeasible(const std::vector<std::string>& binding) {
  std::ostringstream os;
  os << "DER_A dispatch is infeasible; binding limits:";
  for (const auto& b : binding) os << ' ' << b;
  throw InitializationFailure(os.str());
}

}  // namespace

DeraInitialization dera_initialize(const DeraInputs& u0, const DeraParams& prm_in, double P0,
                                   double Q0) {
  prm_in.validate();
  DeraParams prm = prm_in;
  const double V0 = u0.Vt;
  if (!(V0 > 0.0) || !std::isfinite(V0)) throw InitializationFailure("DER_A needs a positive terminal voltage");
  if (P0 < prm.Pmin || P0 > prm.Pmax) {
    std::ostringstream os;
    os << "Pmin/Pmax (P0=" << P0 << " outside [" << prm.Pmin << ", " << prm.Pmax << "])";
    infeasible({os.str()});
  }
  if (prm.Vref0 == 0.0) prm.Vref0 = V0;

  const ProtectionMemory mem{};
  const double vp = numerics::protection_multiplier(V0, prm.vp, mem);
  const double gate = prm.flags.v_tripflag ? vp : 1.0;
  if (!(gate > 0.0)) infeasible({"voltage protection (terminal voltage outside the ride-through band)"});
  const double sat1 = std::max(V0, prm.sat1_floor);
  const double vc = voltage_control(V0, prm);

  // Reactive current that produces Q0, and the integrator value behind it.
  const double iq = -Q0 / V0;
  const double s2 = iq / gate - vc;
  if (prm.flags.pf_flag) {
    if (P0 == 0.0) {
      if (s2 != 0.0) infeasible({"power-factor control cannot supply Q0 at zero active power"});
      prm.pfaref = 0.0;
    } else {
      prm.pfaref = std::atan(s2 * sat1 / P0);
    }
  } else {
    prm.Qref = s2 * sat1;
  }
  prm.Pref = P0 - frequency_error_term(u0.Freq, prm);

  DeraFullState st;
  auto& S = st.S;
  S[0] = V0;
  S[1] = P0;
  S[2] = s2;
  S[4] = vp;
  S[5] = u0.Freq;
  S[6] = P0;
  S[7] = P0;
  S[8] = P0;
  const double p_cmd = active_command(P0, V0, prm);
  const double iq_cmd = iq / gate;
  std::vector<std::string> binding;
  if (prm.flags.pq_flag) {
    const SatLimits il = id_limits(0.0, prm);
    if (p_cmd < il.lo || p_cmd > il.hi) binding.push_back("sat9 (active current limit)");
    const SatLimits ql = iq_limits(p_cmd * gate, prm);
    if (iq_cmd < ql.lo || iq_cmd > ql.hi) binding.push_back("sat2 (reactive current limit)");
  } else {
    const SatLimits ql = iq_limits(0.0, prm);
    if (iq_cmd < ql.lo || iq_cmd > ql.hi) binding.push_back("sat2 (reactive current limit)");
    const SatLimits il = id_limits(iq, prm);
    if (p_cmd < il.lo || p_cmd > il.hi) binding.push_back("sat9 (active current limit)");
  }
  if (!binding.empty()) infeasible(binding);
  S[3] = iq;
  S[9] = p_cmd * gate;

  // Polish with the held power order pinned; its row is identically zero.
  std::vector<int> free_idx{0, 1, 2, 3, 4, 5, 6, 8, 9};
  const ResidualFn residual = [&](const Vector& v) {
    DeraFullState trial = st;
    for (std::size_t k = 0; k < free_idx.size(); ++k) trial.S[free_idx[k]] = v[static_cast<Eigen::Index>(k)];
    const Vector d = dera_full_rhs(trial, u0, prm, mem);
    Vector out(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t k = 0; k < free_idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = d[free_idx[k]];
    return out;
  };
  Vector guess(static_cast<Eigen::Index>(free_idx.size()));
  for (std::size_t k = 0; k < free_idx.size(); ++k) guess[static_cast<Eigen::Index>(k)] = S[free_idx[k]];
  NewtonOptions opts;
  opts.tolerance = 1e-12;
  const NewtonResult r = damped_newton(residual, guess, opts);
  for (std::size_t k = 0; k < free_idx.size(); ++k) S[free_idx[k]] = r.solution[static_cast<Eigen::Index>(k)];

  const double res = dera_full_rhs(st, u0, prm, mem).cwiseAbs().maxCoeff();
  if (!(res <= 1e-9)) {
    std::ostringstream os;
    os << "DER_A initialization residual " << res << " exceeds 1e-9";
    throw InitializationFailure(os.str());
  }
  return {st, prm};
}

Vector dera_time_constants(const DeraParams& prm) {
  Vector c(10);
  c << prm.Trv, prm.Tp, prm.Tiq, prm.Tg, prm.Tv, prm.Trf, prm.Tp * prm.Trf, 1.0, prm.Tpord, prm.Tg;
  return c;
}

spt::TwoTimeScaleSystem dera_two_time_scale(const DeraParams& prm,
                                            std::shared_ptr<const ProtectionMemory> mem,
                                            bool closed_form_qss) {
  prm.validate();
  require_reduced_configuration(prm);
  if (!mem) mem = std::make_shared<const ProtectionMemory>();

  const Vector tc = dera_time_constants(prm);
  Vector fast_tc(6);
  for (int i = 0; i < 6; ++i) fast_tc[i] = tc[kFastIndices[i]];

  spt::TwoTimeScaleSystem sys;
  sys.dims = {4, 6, 2};
  sys.epsilon = fast_tc.maxCoeff();
  sys.fast_scale = fast_tc / sys.epsilon;

  auto assemble = [](const Vector& x, const Vector& z) {
    DeraFullState st;
    for (int i = 0; i < 4; ++i) st.S[kSlowIndices[i]] = x[i];
    for (int i = 0; i < 6; ++i) st.S[kFastIndices[i]] = z[i];
    return st;
  };
  sys.f = [prm, mem, assemble](const Vector& x, const Vector& z, const Vector& u, double) -> Vector {
    const Vector d = dera_full_rhs(assemble(x, z), DeraInputs::from_vector(u), prm, *mem);
    Vector out(4);
    for (int i = 0; i < 4; ++i) out[i] = d[kSlowIndices[i]];
    return out;
  };
  sys.g = [prm, mem, assemble, fast_tc](const Vector& x, const Vector& z, const Vector& u,
                                        double) -> Vector {
    const Vector d = dera_full_rhs(assemble(x, z), DeraInputs::from_vector(u), prm, *mem);
    Vector out(6);
    for (int i = 0; i < 6; ++i) out[i] = fast_tc[i] * d[kFastIndices[i]];
    return out;
  };
  if (closed_form_qss) {
    sys.qss = [prm, mem](const Vector& x, const Vector& u) -> Vector {
      return dera_qss(DeraReducedState::from_vector(x), DeraInputs::from_vector(u), prm, *mem);
    };
  }
  Vector guess = Vector::Zero(6);
  guess[2] = 1.0;
  sys.qss_guess = guess;
  return sys;
}

}  // namespace lsor::dera
