#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/spt.hpp"

namespace lsor::spt {

ErrorOrder trajectory_error_order(std::span<const Trajectory> full, const Trajectory& reduced,
                                  std::span<const double> eps_values,
                                  std::span<const Eigen::Index> slow_indices, double grid_step) {
  if (eps_values.size() < 3) throw InsufficientData("error-order fit needs at least three eps values");
  if (full.size() != eps_values.size())
    throw InsufficientData("one full-model run is required per eps value");
  if (!(grid_step > 0.0)) throw DomainError("grid step must be positive");
  if (reduced.times.empty()) throw InsufficientData("reduced trajectory is empty");

  double t0 = reduced.times.front(), tf = reduced.times.back();
  for (const auto& tr : full) {
    if (tr.times.empty()) throw InsufficientData("full trajectory is empty");
    t0 = std::max(t0, tr.times.front());
    tf = std::min(tf, tr.times.back());
  }
  const auto n_grid = static_cast<long>(std::floor((tf - t0) / grid_step + 1e-9)) + 1;

  ErrorOrder out;
  for (const auto& tr : full) {
    double err = 0.0;
    for (long k = 0; k < n_grid; ++k) {
      const double t = std::min(t0 + static_cast<double>(k) * grid_step, tf);
      const Vector xf = odesolve::dense_output(tr, t);
      const Vector xr = odesolve::dense_output(reduced, t);
      for (std::size_t i = 0; i < slow_indices.size(); ++i)
        err = std::max(err, std::abs(xf[slow_indices[i]] - xr[static_cast<Eigen::Index>(i)]));
    }
    out.errors.push_back(err);
  }

  constexpr double kNearZero = 1e-12;
  for (double e : out.errors)
    if (!(e > kNearZero)) {
      std::ostringstream os;
      os << "slow-state error " << e << " is too small for a log-log fit";
      throw NearZeroError(os.str());
    }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(eps_values.size());
  for (std::size_t i = 0; i < eps_values.size(); ++i) {
    const double lx = std::log(eps_values[i]), ly = std::log(out.errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw InsufficientData("eps values must not all be equal");
  out.slope = (n * sxy - sx * sy) / denom;
  return out;
}

}  // namespace lsor::spt
