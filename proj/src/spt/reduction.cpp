#include <memory>
#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/spt.hpp"

namespace lsor::spt {
namespace {

std::string where(double t, const Vector& x) {
  std::ostringstream os;
  os << " (t=" << t << ", x=[" << x.transpose() << "])";
  return os.str();
}

Vector initial_guess(const TwoTimeScaleSystem& sys) {
  return sys.qss_guess.size() == sys.dims.m ? sys.qss_guess : Vector::Zero(sys.dims.m);
}

// Re-raises a QSS failure with the failing point attached, keeping its type.
[[noreturn]] void rethrow_at(double t, const Vector& x) {
  try {
    throw;
  } catch (const NoIsolatedRoot& e) {
    throw NoIsolatedRoot(e.what() + where(t, x));
  } catch (const SingularJacobian& e) {
    throw SingularJacobian(e.what() + where(t, x));
  } catch (const QssResidualViolation& e) {
    throw QssResidualViolation(e.what() + where(t, x));
  }
}

}  // namespace

OdeRhs reduced_rhs(const TwoTimeScaleSystem& sys) {
  sys.validate();
  // Newton warm start from the previous root.
  auto last = std::make_shared<Vector>(initial_guess(sys));
  return [sys, last](double t, const Vector& x, const Vector& u) -> Vector {
    Vector h;
    try {
      h = qss_solve(sys, x, u, *last);
    } catch (const Error&) {
      rethrow_at(t, x);
    }
    *last = h;
    return sys.f(x, h, u, 0.0);
  };
}

OdeProblem build_reduced(const TwoTimeScaleSystem& sys, const InputSignal& input,
                         const Vector& x0) {
  OdeProblem prob;
  prob.rhs = reduced_rhs(sys);
  prob.input = input;
  prob.initial_state = x0;
  prob.t0 = input.t0();
  prob.tf = input.tf();
  return prob;
}

OdeRhs boundary_layer_rhs(const TwoTimeScaleSystem& sys, const Vector& x_frozen,
                          const Vector& u_frozen) {
  sys.validate();
  const Vector h = qss_solve(sys, x_frozen, u_frozen, initial_guess(sys));
  return [sys, x_frozen, u_frozen, h](double, const Vector& y, const Vector&) -> Vector {
    return sys.g(x_frozen, y + h, u_frozen, 0.0);
  };
}

OdeProblem build_boundary_layer(const TwoTimeScaleSystem& sys, const Vector& x_frozen,
                                const Vector& u_frozen, const Vector& y0, double tau_end) {
  OdeProblem prob;
  prob.rhs = boundary_layer_rhs(sys, x_frozen, u_frozen);
  prob.input = InputSignal::constant(u_frozen, 0.0, tau_end);
  prob.initial_state = y0;
  prob.t0 = 0.0;
  prob.tf = tau_end;
  return prob;
}

OdeProblem fast_deviation_problem(const TwoTimeScaleSystem& sys, const Vector& x_frozen,
                                  const Vector& u_frozen, const Vector& y0, double duration) {
  const OdeRhs layer = boundary_layer_rhs(sys, x_frozen, u_frozen);
  const Vector inv_tc = sys.fast_time_constants().cwiseInverse();
  OdeProblem prob;
  prob.rhs = [layer, inv_tc](double t, const Vector& y, const Vector& u) -> Vector {
    return layer(t, y, u).cwiseProduct(inv_tc);
  };
  prob.input = InputSignal::constant(u_frozen, 0.0, duration);
  prob.initial_state = y0;
  prob.t0 = 0.0;
  prob.tf = duration;
  return prob;
}

}  // namespace lsor::spt
