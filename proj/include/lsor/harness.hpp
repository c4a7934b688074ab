#pragma once

#include <map>
#include <string>
#include <vector>

#include "lsor/dera.hpp"
#include "lsor/motor.hpp"
#include "lsor/odesolve.hpp"
#include "lsor/spt.hpp"

namespace lsor::harness {

// Bus-voltage sag: depth a for b cycles from t = 1 s, then a linear ramp from
// d back to 1 that ends at t = 1 + c.
struct SagParams {
  double a = 0.8;
  double b = 5.0;
  double c = 1.0;
  double d = 0.9;

  void validate() const;
  std::vector<double> breakpoints() const;
};

double sag_voltage(double t, const SagParams& sp);

enum class Model { MotorA, MotorB, MotorC, Dera };
enum class Variant { Full, Reduced, Both };

const char* to_string(Model m);
const char* to_string(Variant v);
const char* to_string(odesolve::Method m);
Model parse_model(const std::string& s);
Variant parse_variant(const std::string& s);
odesolve::Method parse_method(const std::string& s);
bool is_motor(Model m);

struct ScenarioConfig {
  Model model = Model::MotorA;
  Variant variant = Variant::Both;
  odesolve::Method solver = odesolve::Method::NonStiff;
  double t_end = 5.0;
  double grid_step = 1e-3;
  SagParams sag;
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double settle_time = 0.012;
  double motor_slip = 0.03;
  double dera_P0 = 0.5;
  double dera_Q0 = 0.0;
  double frequency_hz = 60.0;
  // Dotted parameter keys ("motor.H", "dera.Trv", "dera.flags.pq_flag", ...)
  // applied on top of the model's embedded defaults.
  std::map<std::string, double> overrides;

  void validate() const;
  odesolve::SolverConfig solver_config() const;
};

// Embedded defaults for the configured motor with overrides applied.
motor::MotorParams motor_params(const ScenarioConfig& cfg);
dera::DeraParams dera_params(const ScenarioConfig& cfg);

// Sets one dotted key; throws ConfigError for unknown keys or bad values.
void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& text);
// Flat JSON object with dotted keys.
ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {});
ScenarioConfig parse_config(const std::string& json_text, ScenarioConfig base = {});

struct SimulationResult {
  Variant variant = Variant::Full;
  std::vector<std::string> state_names;
  std::vector<std::string> output_names;  // currents then P, Q
  std::vector<double> times;              // output grid
  std::vector<Vector> states;
  std::vector<Vector> outputs;
  odesolve::Trajectory trajectory;  // raw solver output
  double integration_seconds = 0.0;
  // Largest fast-block residual at the accepted steps; reduced runs only.
  double qss_residual_max = 0.0;
  long boundary_layer_runs = 0;
};

// One variant (Full or Reduced) of the configured scenario.
SimulationResult simulate(const ScenarioConfig& cfg, Variant which);

struct ComparisonReport {
  double mse_P = 0.0;
  double mse_Q = 0.0;
  std::map<std::string, double> state_mse;
  double timing_full = 0.0;
  double timing_reduced = 0.0;
  double speedup = 0.0;
  odesolve::SolverStats stats_full;
  odesolve::SolverStats stats_reduced;
  double qss_residual_max = 0.0;
  spt::Verdict verdict = spt::Verdict::QssOnly;
};

struct ComparisonResult {
  ComparisonReport report;
  SimulationResult full;
  SimulationResult reduced;
};

ComparisonResult run_comparison(const ScenarioConfig& cfg);

// Mean squared error of two equally long sample sequences.
double mean_squared_error(const std::vector<double>& a, const std::vector<double>& b);

// Decay rates back-computed from the published (T, eps**) pairs.
double motor_decay_fixture();
double dera_decay_fixture();

struct Assessment {
  spt::ReductionDecision decision;
  spt::AccuracyBounds bounds;
};

Assessment assess_model(const ScenarioConfig& cfg);

// Two-time-scale form of the configured model at its initial operating point.
spt::TwoTimeScaleSystem two_time_scale_system(const ScenarioConfig& cfg);

void export_csv(const SimulationResult& r, std::ostream& os);
void export_csv(const SimulationResult& r, const std::string& path);
std::string simulation_json(const SimulationResult& r, const ScenarioConfig& cfg);
std::string report_json(const ComparisonReport& r, const ScenarioConfig& cfg);
std::string assessment_json(const Assessment& a, const ScenarioConfig& cfg);
void write_text(const std::string& path, const std::string& text);

}  // namespace lsor::harness
