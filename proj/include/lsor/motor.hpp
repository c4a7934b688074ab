#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "lsor/spt.hpp"
#include "lsor/types.hpp"

namespace lsor::motor {

struct MotorParams {
  double rs = 0.04;
  double Ls = 1.8;
  double Lp = 0.1;
  double Lpp = 0.083;
  double Tp0 = 0.092;
  double Tpp0 = 0.002;
  double H = 0.05;
  double A = 0.0;
  double B = 0.0;
  double C0 = 0.0;
  double D = 1.0;
  double Etrq = 0.0;
  double p = -1.0;
  double q = -1.0;
  double omega0 = 120.0 * std::numbers::pi;

  void validate() const;

  static MotorParams motor_a();
  static MotorParams motor_b();
  static MotorParams motor_c();
};

struct MotorFullState {
  double Eq_p = 0.0;
  double Ed_p = 0.0;
  double Eq_pp = 0.0;
  double Ed_pp = 0.0;
  double s = 0.0;

  Vector to_vector() const;
  static MotorFullState from_vector(const Vector& v);
};

struct MotorReducedState {
  double x1 = 0.0;  // E'q
  double x2 = 0.0;  // E'd
  double x3 = 0.0;  // slip

  Vector to_vector() const;
  static MotorReducedState from_vector(const Vector& v);
};

struct MotorInputs {
  double Vq = 0.0;
  double Vd = 0.0;

  Vector to_vector() const;
  static MotorInputs from_vector(const Vector& v);
};

struct MotorOutputs {
  double id = 0.0;
  double iq = 0.0;
  double P = 0.0;
  double Q = 0.0;
  double TL = 0.0;
  double Tm0 = 0.0;
};

struct QssPair {
  double h1 = 0.0;  // E''q
  double h2 = 0.0;  // E''d
};

// Load torque multiplier A w^2 + B w + C0 + D w^Etrq at speed w = 1 - s.
double torque_curve(double slip, const MotorParams& prm);

Vector motor_full_rhs(const MotorFullState& state, const MotorInputs& u, const MotorParams& prm,
                      double tm0);
QssPair motor_qss_h(const MotorReducedState& x, const MotorInputs& u, const MotorParams& prm);
Vector motor_reduced_rhs(const MotorReducedState& x, const MotorInputs& u, const MotorParams& prm,
                         double tm0);

MotorOutputs motor_outputs(const MotorFullState& state, const MotorInputs& u,
                           const MotorParams& prm, double tm0);
MotorOutputs motor_outputs(const MotorReducedState& x, const MotorInputs& u,
                           const MotorParams& prm, double tm0);

struct MotorEquilibrium {
  MotorFullState state;
  double tm0 = 0.0;
};

struct MotorReducedEquilibrium {
  MotorReducedState state;
  double tm0 = 0.0;
};

// Steady state at the given slip; the load torque base tm0 is solved along
// with the four EMFs.
MotorEquilibrium motor_initialize(const MotorInputs& u0, const MotorParams& prm, double slip);
MotorReducedEquilibrium motor_initialize_reduced(const MotorInputs& u0, const MotorParams& prm,
                                                 double slip);

// Slow states (E'q, E'd, s), fast states (E''q, E''d), inputs (Vq, Vd);
// epsilon stands in for Tpp0.
spt::TwoTimeScaleSystem motor_two_time_scale(const MotorParams& prm, double tm0,
                                             bool closed_form_qss = true);

// Coefficients multiplying each state derivative: [Tp0, Tp0, Tpp0, Tpp0, H].
Vector motor_time_constants(const MotorParams& prm);

inline constexpr std::array<Eigen::Index, 3> kSlowIndices{0, 1, 4};

}  // namespace lsor::motor
