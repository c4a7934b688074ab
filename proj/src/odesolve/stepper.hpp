#pragma once

#include <memory>

#include "lsor/odesolve.hpp"

namespace lsor::odesolve::detail {

struct StepContext {
  const OdeProblem& problem;
  const SolverConfig& cfg;
  SolverStats& stats;
  // End of the current continuous segment; inputs are read as left limits there.
  mutable double segment_end = 0.0;

  Vector input_at(double t) const;

  // Counted rhs evaluation; throws NumericalBlowup on non-finite output.
  Vector eval(double t, const Vector& y) const;
  // Counted rhs evaluation without the finiteness check.
  Vector eval_raw(double t, const Vector& y) const;
  Matrix jacobian(double t, const Vector& y) const;
  // Throws StiffnessOrSingularity when h is below the underflow threshold.
  void check_step(double h, double t) const;
};

double rms_norm(const Vector& v);

// Starting step estimate for a method of the given order.
double select_initial_step(const StepContext& ctx, double t0, const Vector& y0, const Vector& f0,
                           int order, double t_bound);

class Stepper {
 public:
  virtual ~Stepper() = default;
  // Begin a fresh step sequence at (t, y), discarding history.
  virtual void restart(double t, const Vector& y, double t_bound) = 0;
  // Take one accepted step that does not pass t_bound; lands exactly on it
  // when it is reached.
  virtual void step(double t_bound) = 0;

  double t() const { return t_; }
  const Vector& y() const { return y_; }
  const DenseSegment& last_segment() const { return segment_; }

 protected:
  double t_ = 0.0;
  Vector y_;
  DenseSegment segment_;
};

std::unique_ptr<Stepper> make_dopri5(const StepContext& ctx);
std::unique_ptr<Stepper> make_bdf(const StepContext& ctx);

}  // namespace lsor::odesolve::detail
