#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lsor/errors.hpp"
#include "lsor/spt.hpp"

namespace lsor::spt {

void TwoTimeScaleSystem::validate() const {
  if (!f || !g) throw DomainError("two-time-scale system needs both f and g");
  if (!(epsilon > 0.0)) throw DomainError("two-time-scale system needs epsilon > 0");
  if (dims.n <= 0 || dims.m <= 0 || dims.p < 0)
    throw DomainError("two-time-scale system needs positive slow and fast dimensions");
  if (fast_scale.size() != 0) {
    if (fast_scale.size() != dims.m) throw DomainError("fast_scale must have one entry per fast state");
    if (!(fast_scale.array() > 0.0).all()) throw DomainError("fast_scale entries must be positive");
  }
  if (qss_guess.size() != 0 && qss_guess.size() != dims.m)
    throw DomainError("qss_guess must have one entry per fast state");
}

Vector TwoTimeScaleSystem::fast_time_constants() const {
  if (fast_scale.size() == 0) return Vector::Constant(dims.m, epsilon);
  return epsilon * fast_scale;
}

double SlowFastPartition::epsilon() const {
  double eps = 0.0;
  for (auto i : fast_indices) eps = std::max(eps, per_state_coefficients[i]);
  return eps;
}

void SlowFastPartition::validate() const {
  const auto n = per_state_coefficients.size();
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (auto i : slow_indices) {
    if (i < 0 || i >= n) throw DomainError("partition index out of range");
    ++seen[static_cast<std::size_t>(i)];
  }
  for (auto i : fast_indices) {
    if (i < 0 || i >= n) throw DomainError("partition index out of range");
    ++seen[static_cast<std::size_t>(i)];
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
    throw DomainError("slow and fast index sets must be disjoint and cover all states");
  for (auto f : fast_indices)
    for (auto s : slow_indices)
      if (!(per_state_coefficients[f] < per_state_coefficients[s]))
        throw DomainError("every fast coefficient must be below every slow coefficient");
}

SlowFastPartition identify_partition(const Vector& coefficients, double ratio) {
  if (coefficients.size() < 2) throw DomainError("partitioning needs at least two states");
  if (!(ratio > 1.0)) throw DomainError("partition ratio must exceed 1");
  if (!(coefficients.array() > 0.0).all() || !coefficients.allFinite())
    throw DomainError("perturbation coefficients must be positive and finite");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(coefficients.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return coefficients[a] < coefficients[b]; });

  // Products of time constants pick up rounding, so the ratio test allows a
  // relative slack.
  const double threshold = ratio * (1.0 - 1e-9);
  std::size_t split = 0;
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (coefficients[order[k]] >= threshold * coefficients[order[k - 1]]) {
      split = k;
      break;
    }
  }
  if (split == 0) {
    std::ostringstream os;
    os << "no gap of ratio " << ratio << " between perturbation coefficients";
    throw DomainError(os.str());
  }

  SlowFastPartition part;
  part.per_state_coefficients = coefficients;
  part.fast_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(split));
  part.slow_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(split), order.end());
  std::sort(part.fast_indices.begin(), part.fast_indices.end());
  std::sort(part.slow_indices.begin(), part.slow_indices.end());
  return part;
}

}  // namespace lsor::spt
