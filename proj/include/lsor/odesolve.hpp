#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "lsor/numerics.hpp"
#include "lsor/types.hpp"

namespace lsor::odesolve {

using numerics::InputSignal;

using OdeRhs = std::function<Vector(double t, const Vector& x, const Vector& u)>;

// Called after every accepted step. Returning true signals that a discrete
// model state changed and the integrator restarts from (t, x).
using StepObserver = std::function<bool(double t, const Vector& x, const Vector& u)>;

struct OdeProblem {
  OdeRhs rhs;
  InputSignal input;
  Vector initial_state;
  double t0 = 0.0;
  double tf = 0.0;
  std::vector<double> discontinuity_times;
  StepObserver on_accepted_step;

  void validate() const;
};

enum class Method { NonStiff, Stiff };

struct SolverConfig {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  // 0 selects automatically
  Method method = Method::NonStiff;

  void validate() const;
};

struct SolverStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long rhs_evaluations = 0;
  long jacobian_evaluations = 0;
  long lu_decompositions = 0;
  double wall_clock = 0.0;
};

// Polynomial x(t) = sum_k coeffs.col(k) * s^k with s = (t - origin) / scale,
// valid on [t_begin, t_end].
struct DenseSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  double origin = 0.0;
  double scale = 1.0;
  Matrix coeffs;

  Vector evaluate(double t) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  SolverStats stats;
  std::vector<DenseSegment> segments;
};

Trajectory integrate(const OdeProblem& problem, const SolverConfig& cfg);

Vector dense_output(const Trajectory& traj, double t_query);

// Forward-difference Jacobian of rhs with respect to the state.
Matrix numerical_jacobian(const OdeRhs& rhs, double t, const Vector& state, const Vector& input);

}  // namespace lsor::odesolve
