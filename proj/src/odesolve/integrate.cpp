#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "lsor/errors.hpp"
#include "stepper.hpp"

namespace lsor::odesolve {

void OdeProblem::validate() const {
  if (!rhs) throw DomainError("ODE problem has no right-hand side");
  if (!(t0 < tf)) throw DomainError("ODE problem needs t0 < tf");
  if (initial_state.size() == 0) throw DomainError("ODE problem has an empty initial state");
  if (!initial_state.allFinite()) throw DomainError("ODE initial state is not finite");
  if (!std::is_sorted(discontinuity_times.begin(), discontinuity_times.end()))
    throw DomainError("discontinuity times must be sorted");
}

void SolverConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("solver tolerances must be positive");
  if (!(max_step > 0.0)) throw DomainError("solver max_step must be positive");
  if (initial_step < 0.0) throw DomainError("solver initial_step must be non-negative");
}

namespace detail {

double rms_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

Vector StepContext::input_at(double t) const {
  if (t >= segment_end)
    return problem.input(std::nextafter(segment_end, -std::numeric_limits<double>::infinity()));
  return problem.input(t);
}

Vector StepContext::eval_raw(double t, const Vector& y) const {
  ++stats.rhs_evaluations;
  return problem.rhs(t, y, input_at(t));
}

Vector StepContext::eval(double t, const Vector& y) const {
  Vector f = eval_raw(t, y);
  if (f.size() != y.size()) throw DomainError("rhs returned a vector of the wrong dimension");
  if (!f.allFinite()) {
    std::ostringstream os;
    os << "non-finite derivative at t=" << t;
    throw NumericalBlowup(os.str());
  }
  return f;
}

Matrix StepContext::jacobian(double t, const Vector& y) const {
  ++stats.jacobian_evaluations;
  stats.rhs_evaluations += y.size() + 1;
  return numerical_jacobian(problem.rhs, t, y, input_at(t));
}

void StepContext::check_step(double h, double t) const {
  const double span = std::abs(problem.tf - problem.t0);
  const double floor = 1e2 * std::numeric_limits<double>::epsilon() *
                       std::max(std::abs(t), 1e-3 * span);
  if (!(h >= floor)) {
    std::ostringstream os;
    os << "step size underflow (h=" << h << ") at t=" << t;
    throw StiffnessOrSingularity(os.str(), t);
  }
}

double select_initial_step(const StepContext& ctx, double t0, const Vector& y0, const Vector& f0,
                           int order, double t_bound) {
  const double interval = std::abs(t_bound - t0);
  if (interval == 0.0) return 0.0;
  const Vector scale = (ctx.cfg.abs_tol + ctx.cfg.rel_tol * y0.cwiseAbs().array()).matrix();
  const double d0 = rms_norm(y0.cwiseQuotient(scale));
  const double d1 = rms_norm(f0.cwiseQuotient(scale));
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, interval);
  const Vector y1 = y0 + h0 * f0;
  const Vector f1 = ctx.eval(t0 + h0, y1);
  const double d2 = rms_norm((f1 - f0).cwiseQuotient(scale)) / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dmax, 1.0 / (order + 1));
  return std::min({100 * h0, h1, interval, ctx.cfg.max_step});
}

}  // namespace detail

Trajectory integrate(const OdeProblem& problem, const SolverConfig& cfg) {
  problem.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  Trajectory traj;
  detail::StepContext ctx{problem, cfg, traj.stats};

  std::vector<double> bounds;
  for (double b : problem.discontinuity_times)
    if (b > problem.t0 && b < problem.tf) bounds.push_back(b);
  for (double b : problem.input.breakpoints())
    if (b > problem.t0 && b < problem.tf) bounds.push_back(b);
  std::sort(bounds.begin(), bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
  bounds.push_back(problem.tf);

  auto stepper = cfg.method == Method::Stiff ? detail::make_bdf(ctx) : detail::make_dopri5(ctx);

  traj.times.push_back(problem.t0);
  traj.states.push_back(problem.initial_state);
  ctx.segment_end = bounds.front();
  stepper->restart(problem.t0, problem.initial_state, bounds.front());

  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const double bound = bounds[k];
    ctx.segment_end = bound;
    while (stepper->t() < bound) {
      stepper->step(bound);
      traj.times.push_back(stepper->t());
      traj.states.push_back(stepper->y());
      traj.segments.push_back(stepper->last_segment());
      if (problem.on_accepted_step) {
        const double t = stepper->t();
        const bool changed = problem.on_accepted_step(t, stepper->y(), problem.input(t));
        if (changed && t < bound) stepper->restart(t, stepper->y(), bound);
      }
    }
    if (k + 1 < bounds.size()) {
      ctx.segment_end = bounds[k + 1];
      stepper->restart(bound, stepper->y(), bounds[k + 1]);
    }
  }

  traj.stats.wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

}  // namespace lsor::odesolve
