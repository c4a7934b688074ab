#include <cmath>

#include "lsor/errors.hpp"
#include "lsor/harness.hpp"

namespace lsor::harness {

void SagParams::validate() const {
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("sag depth a must lie in [0, 1]");
  if (!(b > 0.0)) throw DomainError("sag duration b must be positive");
  if (!(c > b / 60.0)) throw DomainError("sag recovery offset c must exceed b/60");
  if (!(d >= 0.0 && d <= 1.0)) throw DomainError("sag recovery level d must lie in [0, 1]");
}

std::vector<double> SagParams::breakpoints() const { return {1.0, 1.0 + b / 60.0, 1.0 + c}; }

double sag_voltage(double t, const SagParams& sp) {
  const double hold_end = 1.0 + sp.b / 60.0;
  if (t >= 1.0 && t < hold_end) return sp.a;
  if (t >= hold_end && t < 1.0 + sp.c) return (1.0 - sp.d) * (sp.c + 1.0 - t) / (sp.b / 60.0 - sp.c) + 1.0;
  return 1.0;
}

const char* to_string(Model m) {
  switch (m) {
    case Model::MotorA: return "motor-a";
    case Model::MotorB: return "motor-b";
    case Model::MotorC: return "motor-c";
    case Model::Dera: return "dera";
  }
  return "?";
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::Reduced: return "reduced";
    case Variant::Both: return "both";
  }
  return "?";
}

const char* to_string(odesolve::Method m) {
  return m == odesolve::Method::Stiff ? "stiff" : "nonstiff";
}

Model parse_model(const std::string& s) {
  if (s == "motor-a") return Model::MotorA;
  if (s == "motor-b") return Model::MotorB;
  if (s == "motor-c") return Model::MotorC;
  if (s == "dera") return Model::Dera;
  throw ConfigError("unknown model '" + s + "' (motor-a, motor-b, motor-c, dera)");
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "reduced") return Variant::Reduced;
  if (s == "both") return Variant::Both;
  throw ConfigError("unknown variant '" + s + "' (full, reduced, both)");
}

odesolve::Method parse_method(const std::string& s) {
  if (s == "nonstiff") return odesolve::Method::NonStiff;
  if (s == "stiff") return odesolve::Method::Stiff;
  throw ConfigError("unknown solver '" + s + "' (nonstiff, stiff)");
}

bool is_motor(Model m) { return m != Model::Dera; }

}  // namespace lsor::harness
