#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lsor/odesolve.hpp"
#include "lsor/types.hpp"

namespace lsor::spt {

using numerics::InputSignal;
using odesolve::OdeProblem;
using odesolve::OdeRhs;
using odesolve::Trajectory;

// (x, z, u, eps) -> vector. f drives the slow states, g is the fast block in
// the scaled form eps*dz/dt = g.
using BlockFn =
    std::function<Vector(const Vector& x, const Vector& z, const Vector& u, double eps)>;
using QssFn = std::function<Vector(const Vector& x, const Vector& u)>;

struct Dims {
  Eigen::Index n = 0;  // slow states
  Eigen::Index m = 0;  // fast states
  Eigen::Index p = 0;  // inputs
};

struct TwoTimeScaleSystem {
  BlockFn f;
  BlockFn g;
  double epsilon = 0.0;
  QssFn qss;  // optional closed-form root of g(x, ., u, 0)
  Dims dims;
  // Fast row i evolves as (epsilon * fast_scale[i]) dz_i/dt = g_i. Empty means all ones.
  Vector fast_scale;
  // Newton starting point when no closed-form root is supplied. Empty means zeros.
  Vector qss_guess;

  void validate() const;
  Vector fast_time_constants() const;
};

struct SlowFastPartition {
  std::vector<Eigen::Index> slow_indices;
  std::vector<Eigen::Index> fast_indices;
  Vector per_state_coefficients;

  double epsilon() const;  // largest fast coefficient
  void validate() const;
};

// States whose coefficient sits below the first sorted gap of at least
// `ratio` are fast.
SlowFastPartition identify_partition(const Vector& coefficients, double ratio = 10.0);

struct AccuracyBounds {
  double mu = 0.0;
  double b3 = 1.0;
  double b5 = 1.0;
  double b6 = 1.0;
  double k0 = 1.0;
  double a = 1.0;
  double k1 = 1.0;

  void validate() const;
};

enum class Verdict { QssOnly, QssPlusBoundaryLayer, Repartition };
const char* to_string(Verdict v);

struct ReductionDecision {
  Verdict verdict = Verdict::Repartition;
  double epsilon = 0.0;
  double eps_star = 0.0;
  double eps_double_star = 0.0;  // NaN when no root exists
  double settle_time_T = 0.0;
  bool eps_double_star_available = false;
};

Vector qss_solve(const TwoTimeScaleSystem& sys, const Vector& x, const Vector& u,
                 const Vector& z_guess);

// Infinity norm of g(x, z, u, 0).
double qss_residual(const TwoTimeScaleSystem& sys, const Vector& x, const Vector& u,
                    const Vector& z);

// rhs(t, x, u) = f(x, h(x, u), u, 0).
OdeRhs reduced_rhs(const TwoTimeScaleSystem& sys);
OdeProblem build_reduced(const TwoTimeScaleSystem& sys, const InputSignal& input,
                         const Vector& x0);

// rhs(tau, y) = g(x, y + h(x, u), u, 0) with x and u frozen.
OdeRhs boundary_layer_rhs(const TwoTimeScaleSystem& sys, const Vector& x_frozen,
                          const Vector& u_frozen);
OdeProblem build_boundary_layer(const TwoTimeScaleSystem& sys, const Vector& x_frozen,
                                const Vector& u_frozen, const Vector& y0, double tau_end);

// Fast deviation in physical time: (epsilon * fast_scale[i]) dy_i/dt = g_i.
OdeProblem fast_deviation_problem(const TwoTimeScaleSystem& sys, const Vector& x_frozen,
                                  const Vector& u_frozen, const Vector& y0, double duration);

struct DecayFit {
  double k1 = 0.0;
  double a = 0.0;
};

DecayFit estimate_decay(const Trajectory& traj);
// Same fit on explicit samples of the norm.
DecayFit estimate_decay(std::span<const double> tau, std::span<const double> norms);

double epsilon_star(const AccuracyBounds& b);
double solve_eps_double_star(double a, double T);
double solve_T_given_eps(double a, double eps);
// Decay rate implied by a (T, eps) pair of eps*ln(1/eps) = a*T.
double decay_rate_from_pair(double T, double eps);

ReductionDecision assess(const TwoTimeScaleSystem& sys, const AccuracyBounds& b,
                         double T_required);

struct ErrorOrder {
  double slope = 0.0;
  std::vector<double> errors;
};

// Sup-norm slow-state error of each full run against the reduced run on a
// uniform grid, and the least-squares slope of log(error) against log(eps).
ErrorOrder trajectory_error_order(std::span<const Trajectory> full, const Trajectory& reduced,
                                  std::span<const double> eps_values,
                                  std::span<const Eigen::Index> slow_indices,
                                  double grid_step = 1e-3);

struct OperatingSample {
  Vector x;
  Vector u;
};

// Solution P of A^T P + P A = -I.
Matrix solve_lyapunov(const Matrix& a);

// Numerical defaults for the growth constants over the sampled operating box.
AccuracyBounds estimate_bounds(const TwoTimeScaleSystem& sys,
                               std::span<const OperatingSample> samples, double mu,
                               const DecayFit& decay);

}  // namespace lsor::spt
