#include "lsor/newton.hpp"
#include "lsor/odesolve.hpp"

namespace lsor::odesolve {

Matrix numerical_jacobian(const OdeRhs& rhs, double t, const Vector& state, const Vector& input) {
  const ResidualFn fn = [&](const Vector& x) { return rhs(t, x, input); };
  return forward_difference_jacobian(fn, state, fn(state));
}

}  // namespace lsor::odesolve
