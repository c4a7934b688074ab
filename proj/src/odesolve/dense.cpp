#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/odesolve.hpp"

namespace lsor::odesolve {

Vector DenseSegment::evaluate(double t) const {
  const double s = (t - origin) / scale;
  Vector x = coeffs.col(coeffs.cols() - 1);
  for (Eigen::Index k = coeffs.cols() - 2; k >= 0; --k) x = x * s + coeffs.col(k);
  return x;
}

Vector dense_output(const Trajectory& traj, double t_query) {
  if (traj.times.empty()) throw DomainError("dense output on an empty trajectory");
  const double t0 = traj.times.front();
  const double tf = traj.times.back();
  if (!(t_query >= t0 && t_query <= tf)) {
    std::ostringstream os;
    os << "dense output query t=" << t_query << " outside [" << t0 << ", " << tf << "]";
    throw DomainError(os.str());
  }
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t_query);
  const auto idx = static_cast<std::size_t>(it - traj.times.begin());
  if (it != traj.times.end() && *it == t_query) return traj.states[idx];

  // Node idx is the first one after t_query; segment idx-1 ends there.
  if (traj.segments.size() + 1 == traj.times.size()) return traj.segments[idx - 1].evaluate(t_query);

  // Trajectories without polynomial data fall back to linear interpolation.
  const double ta = traj.times[idx - 1], tb = traj.times[idx];
  const double w = (t_query - ta) / (tb - ta);
  return (1.0 - w) * traj.states[idx - 1] + w * traj.states[idx];
}

}  // namespace lsor::odesolve
