#include "lsor/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsor/errors.hpp"

namespace lsor::numerics {

void SatLimits::validate() const {
  if (!(lo <= hi)) {
    std::ostringstream os;
    os << "saturation limits out of order: lo=" << lo << " hi=" << hi;
    throw DomainError(os.str());
  }
}

void DeadbandLimits::validate() const {
  if (!(db_lo <= 0.0 && db_hi >= 0.0)) {
    std::ostringstream os;
    os << "deadband must straddle zero: lo=" << db_lo << " hi=" << db_hi;
    throw DomainError(os.str());
  }
}

double saturate(double x, const SatLimits& lim) { return std::min(std::max(x, lim.lo), lim.hi); }

double deadband(double x, const DeadbandLimits& db) {
  if (x > db.db_hi) return x - db.db_hi;
  if (x < db.db_lo) return x - db.db_lo;
  return 0.0;
}

void VoltageProtectionParams::validate() const {
  if (!(v_l0 < v_l1 && v_l1 < v_h1 && v_h1 < v_h0))
    throw DomainError("voltage protection break-points must satisfy v_l0 < v_l1 < v_h1 < v_h0");
  if (t_vl0 < 0 || t_vl1 < 0 || t_vh0 < 0 || t_vh1 < 0)
    throw DomainError("voltage protection timers must be non-negative");
  if (!(v_rfrac >= 0.0 && v_rfrac <= 1.0))
    throw DomainError("voltage protection recovery fraction must lie in [0, 1]");
}

double protection_curve(double v, const VoltageProtectionParams& vp) {
  if (v <= vp.v_l0 || v >= vp.v_h0) return 0.0;
  if (v < vp.v_l1) return (v - vp.v_l0) / (vp.v_l1 - vp.v_l0);
  if (v > vp.v_h1) return (vp.v_h0 - v) / (vp.v_h0 - vp.v_h1);
  return 1.0;
}

namespace {

bool inside_band(double v, const VoltageProtectionParams& vp) {
  return v >= vp.v_l1 && v <= vp.v_h1;
}

double recovered_level(const ProtectionMemory& m, const VoltageProtectionParams& vp) {
  if (m.in_excursion && m.latched < m.available)
    return m.latched + vp.v_rfrac * (m.available - m.latched);
  return m.available;
}

double excursion_timer(double v, const VoltageProtectionParams& vp) {
  if (v < vp.v_l1) return v <= vp.v_l0 ? vp.t_vl0 : vp.t_vl1;
  return v >= vp.v_h0 ? vp.t_vh0 : vp.t_vh1;
}

}  // namespace

double protection_multiplier(double v, const VoltageProtectionParams& vp,
                             const ProtectionMemory& memory) {
  if (inside_band(v, vp)) return recovered_level(memory, vp);
  const double level = memory.in_excursion ? memory.latched : memory.available;
  return std::min(protection_curve(v, vp), level);
}

ProtectionResult voltage_protection(double v, double t, const VoltageProtectionParams& vp,
                                    ProtectionMemory memory) {
  if (inside_band(v, vp)) {
    if (memory.in_excursion) {
      memory.available = recovered_level(memory, vp);
      memory.latched = memory.available;
      memory.in_excursion = false;
      memory.excursion_min = memory.available;
    }
    return {memory.available, memory};
  }
  const double curve = protection_curve(v, vp);
  if (!memory.in_excursion) {
    memory.in_excursion = true;
    memory.excursion_start = t;
    memory.excursion_min = curve;
    memory.latched = memory.available;
  } else {
    memory.excursion_min = std::min(memory.excursion_min, curve);
  }
  if (t - memory.excursion_start >= excursion_timer(v, vp))
    memory.latched = std::min(memory.latched, memory.excursion_min);
  return {std::min(curve, memory.latched), memory};
}

InputSignal::InputSignal(Evaluator evaluator, double t0, double tf,
                         std::vector<double> breakpoints, Evaluator derivative)
    : evaluator_(std::move(evaluator)),
      derivative_(std::move(derivative)),
      t0_(t0),
      tf_(tf),
      breakpoints_(std::move(breakpoints)) {
  if (!evaluator_) throw DomainError("input signal needs an evaluator");
  if (!(t0_ < tf_)) throw DomainError("input signal horizon must satisfy t0 < tf");
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

InputSignal InputSignal::constant(const Vector& value, double t0, double tf) {
  return InputSignal([value](double) { return value; }, t0, tf, {},
                     [value](double) { return Vector::Zero(value.size()).eval(); });
}

void InputSignal::check_time(double t) const {
  const double slack = 1e-12 * (1.0 + std::abs(t0_) + std::abs(tf_));
  if (!(t >= t0_ - slack && t <= tf_ + slack)) {
    std::ostringstream os;
    os << "input queried at t=" << t << " outside horizon [" << t0_ << ", " << tf_ << "]";
    throw DomainError(os.str());
  }
}

Vector InputSignal::operator()(double t) const {
  check_time(t);
  Vector u = evaluator_(t);
  if (!u.allFinite()) {
    std::ostringstream os;
    os << "input signal is not finite at t=" << t;
    throw DomainError(os.str());
  }
  return u;
}

std::optional<Vector> InputSignal::derivative(double t) const {
  check_time(t);
  if (!derivative_) return std::nullopt;
  return derivative_(t);
}

Eigen::Index InputSignal::size() const { return evaluator_(t0_).size(); }

Vector evaluate_input(const InputSignal& sig, double t) { return sig(t); }

}  // namespace lsor::numerics
