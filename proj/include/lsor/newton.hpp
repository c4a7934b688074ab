#pragma once

#include <functional>

#include "lsor/types.hpp"

namespace lsor {

using ResidualFn = std::function<Vector(const Vector&)>;

struct NewtonOptions {
  int max_iterations = 50;
  int max_halvings = 10;
  double tolerance = 1e-10;  // infinity norm of the residual
  int polish_iterations = 2;
};

struct NewtonResult {
  Vector solution;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Forward differences with per-component step max(1e-8, 1e-8*|x_j|).
Matrix forward_difference_jacobian(const ResidualFn& fn, const Vector& x, const Vector& f0);

// Damped Newton: full step first, halved up to max_halvings times while the
// residual does not decrease. Throws SingularJacobian when the Jacobian at an
// iterate cannot be factored; otherwise reports convergence in the result.
NewtonResult damped_newton(const ResidualFn& fn, const Vector& guess,
                           const NewtonOptions& options = {});

}  // namespace lsor
