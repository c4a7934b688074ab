#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/newton.hpp"
#include "lsor/spt.hpp"

namespace lsor::spt {

double qss_residual(const TwoTimeScaleSystem& sys, const Vector& x, const Vector& u,
                    const Vector& z) {
  const Vector r = sys.g(x, z, u, 0.0);
  return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff();
}

Vector qss_solve(const TwoTimeScaleSystem& sys, const Vector& x, const Vector& u,
                 const Vector& z_guess) {
  constexpr double kClosedFormTolerance = 1e-8;
  if (sys.qss) {
    Vector h = sys.qss(x, u);
    const double res = qss_residual(sys, x, u, h);
    if (!(res <= kClosedFormTolerance)) {
      std::ostringstream os;
      os << "closed-form quasi-steady state has residual " << res;
      throw QssResidualViolation(os.str());
    }
    return h;
  }
  const ResidualFn fn = [&](const Vector& z) { return sys.g(x, z, u, 0.0); };
  const NewtonResult r = damped_newton(fn, z_guess);
  if (!r.converged) {
    std::ostringstream os;
    os << "no isolated quasi-steady root: Newton stopped after " << r.iterations
       << " iterations with residual " << r.residual_norm;
    throw NoIsolatedRoot(os.str());
  }
  return r.solution;
}

}  // namespace lsor::spt
