#pragma once

#include <array>
#include <memory>

#include "lsor/numerics.hpp"
#include "lsor/spt.hpp"
#include "lsor/types.hpp"

namespace lsor::dera {

using numerics::ProtectionMemory;

struct DeraFlags {
  bool pf_flag = true;      // constant power factor (false: constant Q)
  bool v_tripflag = true;   // voltage protection gates the currents
  bool freq_flag = false;   // frequency control active
  bool f_tripflag = true;   // stored only
  bool pq_flag = false;     // false: Q priority, true: P priority
  bool typeflag = true;     // true: current may reverse (storage)
};

struct DeraParams {
  double Trv = 0.1, Tp = 0.1, Tiq = 0.005, Tg = 0.005, Tv = 0.005, Trf = 0.1, Tpord = 0.005;
  double Kqv = 5.0, Kpg = 0.1, Kig = 10.0, Ddn = 20.0, Dup = 0.0;
  double Gdn = 0.0, Gup = 0.0;
  double Vref0 = 0.0;  // 0 means: take the steady terminal voltage at initialization
  double pfaref = 0.0;
  double Qref = 0.0;
  double Pref = 0.0;
  double Freq_ref = 1.0;
  double Imax = 1.2, Iql1 = -1.0, Iqh1 = 1.0;
  double Pmin = 0.0, Pmax = 1.1, dPmin = -0.5, dPmax = 0.5;
  double femin = -99.0, femax = 99.0;
  double dbd1 = -0.05, dbd2 = 0.05, fdbd1 = -0.0006, fdbd2 = 0.0006;
  double Xe = 0.25, Vpr = 0.8;
  double sat1_floor = 0.01;
  numerics::VoltageProtectionParams vp;
  DeraFlags flags;

  void validate() const;
  static DeraParams reference();
};

struct DeraFullState {
  std::array<double, 10> S{};

  Vector to_vector() const;
  static DeraFullState from_vector(const Vector& v);
};

struct DeraReducedState {
  double x1 = 0.0;  // filtered voltage S0
  double x2 = 0.0;  // filtered power S1
  double x3 = 0.0;  // filtered frequency S5
  double x4 = 0.0;  // power order S7

  Vector to_vector() const;
  static DeraReducedState from_vector(const Vector& v);
};

// Deviations of S2, S3, S4, S6, S8, S9 from their quasi-steady values.
struct DeraBoundaryState {
  std::array<double, 6> y{};

  Vector to_vector() const;
  static DeraBoundaryState from_vector(const Vector& v);
};

struct DeraInputs {
  double Vt = 1.0;
  double Freq = 1.0;  // pu of 60 Hz

  Vector to_vector() const;
  static DeraInputs from_vector(const Vector& v);
};

inline double hz_to_pu(double hz) { return hz / 60.0; }

inline constexpr std::array<Eigen::Index, 4> kSlowIndices{0, 1, 5, 7};
inline constexpr std::array<Eigen::Index, 6> kFastIndices{2, 3, 4, 6, 8, 9};

// Derivative of the ten states. The protection memory is read, not advanced.
Vector dera_full_rhs(const DeraFullState& state, const DeraInputs& u, const DeraParams& prm,
                     const ProtectionMemory& mem);

// Advances the protection memory at an accepted step.
ProtectionMemory dera_step_protection(double filtered_voltage, double t, const DeraParams& prm,
                                      const ProtectionMemory& mem);

// Reactive current command before limiting.
double dera_gamma(const DeraReducedState& x, const DeraParams& prm);

// Quasi-steady values of S2, S3, S4, S6, S8, S9.
Vector dera_qss(const DeraReducedState& x, const DeraInputs& u, const DeraParams& prm,
                const ProtectionMemory& mem);

Vector dera_reduced_rhs(const DeraReducedState& x, const DeraInputs& u, const DeraParams& prm);

// Boundary-layer rows in stretched time, each row normalized by its own time constant.
Vector dera_boundary_rhs(const DeraBoundaryState& y, const DeraReducedState& x,
                         const DeraInputs& u, const DeraParams& prm, const ProtectionMemory& mem);

struct DeraCurrents {
  double iq = 0.0;
  double id = 0.0;
};

DeraCurrents dera_currents(const DeraReducedState& x, const DeraBoundaryState& y,
                           const DeraInputs& u, const DeraParams& prm, const ProtectionMemory& mem);

struct DeraPower {
  double P = 0.0;
  double Q = 0.0;
};

DeraPower dera_outputs(double iq, double id, const DeraInputs& u);

struct DeraInitialization {
  DeraFullState state;
  DeraParams params;  // with Vref0, pfaref or Qref, and Pref resolved
};

DeraInitialization dera_initialize(const DeraInputs& u0, const DeraParams& prm, double P0,
                                   double Q0);

// Slow (S0, S1, S5, S7) and fast (S2, S3, S4, S6, S8, S9) blocks; each fast row
// is multiplied by its own time constant. Requires the frequency loop off.
spt::TwoTimeScaleSystem dera_two_time_scale(const DeraParams& prm,
                                            std::shared_ptr<const ProtectionMemory> mem,
                                            bool closed_form_qss = true);

// Coefficients multiplying each state derivative.
Vector dera_time_constants(const DeraParams& prm);

}  // namespace lsor::dera
