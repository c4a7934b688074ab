#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lsor/types.hpp"

namespace lsor::numerics {

struct SatLimits {
  double lo = 0.0;
  double hi = 0.0;
  void validate() const;
};

struct DeadbandLimits {
  double db_lo = 0.0;
  double db_hi = 0.0;
  void validate() const;
};

double saturate(double x, const SatLimits& lim);

// Offset convention: zero inside the band, distance to the band edge outside.
double deadband(double x, const DeadbandLimits& db);

struct VoltageProtectionParams {
  double v_l0 = 0.44, v_l1 = 0.49, v_h0 = 1.2, v_h1 = 1.15;
  double t_vl0 = 0.16, t_vl1 = 0.16, t_vh0 = 0.16, t_vh1 = 0.16;
  double v_rfrac = 0.7;
  void validate() const;
};

// Latched state of the protection block. `available` is the fraction online
// between excursions; `latched` is the lowest level locked in during the
// current excursion.
struct ProtectionMemory {
  double available = 1.0;
  double latched = 1.0;
  bool in_excursion = false;
  double excursion_start = 0.0;
  double excursion_min = 1.0;

  bool operator==(const ProtectionMemory&) const = default;
};

// Stateless fraction-online curve.
double protection_curve(double v, const VoltageProtectionParams& vp);

// Multiplier seen by the model for the given memory, without updating it.
double protection_multiplier(double v, const VoltageProtectionParams& vp,
                             const ProtectionMemory& memory);

struct ProtectionResult {
  double multiplier;
  ProtectionMemory memory;
};

// Advances the memory to time t with voltage v and returns the multiplier.
ProtectionResult voltage_protection(double v, double t, const VoltageProtectionParams& vp,
                                    ProtectionMemory memory);

class InputSignal {
 public:
  using Evaluator = std::function<Vector(double)>;

  InputSignal() = default;
  InputSignal(Evaluator evaluator, double t0, double tf, std::vector<double> breakpoints = {},
              Evaluator derivative = {});

  static InputSignal constant(const Vector& value, double t0, double tf);

  Vector operator()(double t) const;
  std::optional<Vector> derivative(double t) const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  double t0() const { return t0_; }
  double tf() const { return tf_; }
  Eigen::Index size() const;

 private:
  void check_time(double t) const;

  Evaluator evaluator_;
  Evaluator derivative_;
  double t0_ = 0.0;
  double tf_ = 0.0;
  std::vector<double> breakpoints_;
};

Vector evaluate_input(const InputSignal& sig, double t);

}  // namespace lsor::numerics
