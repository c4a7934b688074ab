#include "lsor/newton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lsor/errors.hpp"

namespace lsor {

Matrix forward_difference_jacobian(const ResidualFn& fn, const Vector& x, const Vector& f0) {
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = std::max(1e-8, 1e-8 * std::abs(x[j]));
    xp[j] = x[j] + step;
    const double actual = xp[j] - x[j];
    jac.col(j) = (fn(xp) - f0) / actual;
    xp[j] = x[j];
  }
  if (!jac.allFinite()) throw NumericalBlowup("finite-difference Jacobian has non-finite entries");
  return jac;
}

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vector newton_direction(const ResidualFn& fn, const Vector& x, const Vector& r) {
  const Matrix jac = forward_difference_jacobian(fn, x, r);
  Eigen::FullPivLU<Matrix> lu(jac);
  // Pivots below the rounding noise of the difference quotients count as zero.
  double min_step = INFINITY;
  for (Eigen::Index j = 0; j < x.size(); ++j) min_step = std::min(min_step, std::max(1e-8, 1e-8 * std::abs(x[j])));
  const double noise = 4.0 * std::numeric_limits<double>::epsilon() * inf_norm(r) / min_step;
  if (lu.maxPivot() > 0.0)
    lu.setThreshold(std::max(lu.threshold(), noise / lu.maxPivot()));
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "singular Jacobian at Newton iterate (rank " << lu.rank() << " of " << jac.cols() << ")";
    throw SingularJacobian(os.str());
  }
  return -lu.solve(r);
}

}  // namespace

NewtonResult damped_newton(const ResidualFn& fn, const Vector& guess,
                           const NewtonOptions& options) {
  NewtonResult out;
  out.solution = guess;
  Vector r = fn(out.solution);
  if (!r.allFinite()) throw NumericalBlowup("Newton residual is not finite at the initial guess");
  out.residual_norm = inf_norm(r);

  while (out.residual_norm > options.tolerance && out.iterations < options.max_iterations) {
    ++out.iterations;
    const Vector dx = newton_direction(fn, out.solution, r);
    double lambda = 1.0;
    bool improved = false;
    for (int k = 0; k <= options.max_halvings; ++k, lambda *= 0.5) {
      Vector trial = out.solution + lambda * dx;
      Vector rt = fn(trial);
      if (rt.allFinite() && inf_norm(rt) < out.residual_norm) {
        out.solution = std::move(trial);
        r = std::move(rt);
        out.residual_norm = inf_norm(r);
        improved = true;
        break;
      }
    }
    if (!improved) return out;
  }
  if (out.residual_norm > options.tolerance) return out;
  out.converged = true;

  for (int k = 0; k < options.polish_iterations && out.residual_norm > 0.0; ++k) {
    Vector dx;
    try {
      dx = newton_direction(fn, out.solution, r);
    } catch (const SingularJacobian&) {
      break;
    }
    Vector trial = out.solution + dx;
    Vector rt = fn(trial);
    if (!rt.allFinite() || inf_norm(rt) >= out.residual_norm) break;
    out.solution = std::move(trial);
    r = std::move(rt);
    out.residual_norm = inf_norm(r);
  }
  return out;
}

}  // namespace lsor
