#include <cmath>
#include <sstream>
#include <vector>

#include "lsor/errors.hpp"
#include "lsor/spt.hpp"

namespace lsor::spt {

DecayFit estimate_decay(std::span<const double> tau, std::span<const double> norms) {
  if (tau.size() != norms.size() || tau.empty())
    throw InsufficientData("decay fit needs matching, non-empty time and norm samples");
  const double upper = 0.9 * norms[0];
  constexpr double lower = 1e-8;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(norms[i] >= lower && norms[i] <= upper)) continue;
    const double ly = std::log(norms[i]);
    sx += tau[i];
    sy += ly;
    sxx += tau[i] * tau[i];
    sxy += tau[i] * ly;
    ++count;
  }
  if (count < 2) throw NotExponentiallyStable("no decay: the norm never enters the fit window");
  const double n = static_cast<double>(count);
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw NotExponentiallyStable("degenerate decay fit window");
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  if (!(slope < 0.0)) {
    std::ostringstream os;
    os << "boundary layer is not decaying (fitted slope " << slope << ")";
    throw NotExponentiallyStable(os.str());
  }
  return {std::exp(intercept), -slope};
}

DecayFit estimate_decay(const Trajectory& traj) {
  std::vector<double> tau, norms;
  if (traj.times.size() < 2) throw InsufficientData("decay fit needs at least two samples");
  if (traj.segments.size() + 1 == traj.times.size()) {
    constexpr int kSamples = 2000;
    const double t0 = traj.times.front(), tf = traj.times.back();
    for (int i = 0; i <= kSamples; ++i) {
      const double t = i == kSamples ? tf : t0 + (tf - t0) * i / kSamples;
      tau.push_back(t);
      norms.push_back(odesolve::dense_output(traj, t).norm());
    }
  } else {
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      tau.push_back(traj.times[i]);
      norms.push_back(traj.states[i].norm());
    }
  }
  return estimate_decay(tau, norms);
}

}  // namespace lsor::spt
