#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "lsor/errors.hpp"
#include "lsor/harness.hpp"

namespace lsor::harness {

using nlohmann::ordered_json;

namespace {

std::string shortest(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json stats_json(const odesolve::SolverStats& s) {
  return {{"steps_accepted", s.steps_accepted},
          {"steps_rejected", s.steps_rejected},
          {"rhs_evaluations", s.rhs_evaluations},
          {"jacobian_evaluations", s.jacobian_evaluations},
          {"lu_decompositions", s.lu_decompositions},
          {"wall_clock", s.wall_clock}};
}

// Non-finite numbers become null in JSON.
ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json config_json(const ScenarioConfig& cfg) {
  ordered_json j{{"model", to_string(cfg.model)},
                 {"variant", to_string(cfg.variant)},
                 {"solver", to_string(cfg.solver)},
                 {"t_end", cfg.t_end},
                 {"grid", cfg.grid_step},
                 {"sag.a", cfg.sag.a},
                 {"sag.b", cfg.sag.b},
                 {"sag.c", cfg.sag.c},
                 {"sag.d", cfg.sag.d},
                 {"rel_tol", cfg.rel_tol},
                 {"abs_tol", cfg.abs_tol},
                 {"settle_time", cfg.settle_time}};
  if (is_motor(cfg.model)) {
    j["motor.slip"] = cfg.motor_slip;
  } else {
    j["dera.P0"] = cfg.dera_P0;
    j["dera.Q0"] = cfg.dera_Q0;
    j["dera.frequency_hz"] = cfg.frequency_hz;
  }
  for (const auto& [key, value] : cfg.overrides) j[key] = value;
  return j;
}

}  // namespace

void export_csv(const SimulationResult& r, std::ostream& os) {
  os << 't';
  for (const auto& n : r.state_names) os << ',' << n;
  for (const auto& n : r.output_names) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    os << shortest(r.times[k]);
    for (Eigen::Index i = 0; i < r.states[k].size(); ++i) os << ',' << shortest(r.states[k][i]);
    for (Eigen::Index i = 0; i < r.outputs[k].size(); ++i) os << ',' << shortest(r.outputs[k][i]);
    os << '\n';
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

void export_csv(const SimulationResult& r, const std::string& path) {
  std::ostringstream os;
  export_csv(r, os);
  write_text(path, os.str());
}

std::string simulation_json(const SimulationResult& r, const ScenarioConfig& cfg) {
  ordered_json j;
  j["variant"] = to_string(r.variant);
  j["t"] = r.times;
  ordered_json states = ordered_json::object();
  for (std::size_t i = 0; i < r.state_names.size(); ++i) {
    std::vector<double> col;
    for (const Vector& v : r.states) col.push_back(v[static_cast<Eigen::Index>(i)]);
    states[r.state_names[i]] = col;
  }
  j["states"] = states;
  ordered_json outputs = ordered_json::object();
  for (std::size_t i = 0; i < r.output_names.size(); ++i) {
    std::vector<double> col;
    for (const Vector& v : r.outputs) col.push_back(v[static_cast<Eigen::Index>(i)]);
    outputs[r.output_names[i]] = col;
  }
  j["outputs"] = outputs;
  j["stats"] = stats_json(r.trajectory.stats);
  j["integration_seconds"] = r.integration_seconds;
  if (r.variant == Variant::Reduced) {
    j["qss_residual_max"] = r.qss_residual_max;
    j["boundary_layer_runs"] = r.boundary_layer_runs;
  }
  j["config"] = config_json(cfg);
  return j.dump(2) + "\n";
}

std::string report_json(const ComparisonReport& r, const ScenarioConfig& cfg) {
  ordered_json j{{"model", to_string(cfg.model)},
                 {"solver", to_string(cfg.solver)},
                 {"mse_P", r.mse_P},
                 {"mse_Q", r.mse_Q},
                 {"state_mse", r.state_mse},
                 {"timing_full", r.timing_full},
                 {"timing_reduced", r.timing_reduced},
                 {"speedup", number(r.speedup)},
                 {"verdict", spt::to_string(r.verdict)},
                 {"qss_residual_max", r.qss_residual_max},
                 {"stats_full", stats_json(r.stats_full)},
                 {"stats_reduced", stats_json(r.stats_reduced)},
                 {"config", config_json(cfg)}};
  return j.dump(2) + "\n";
}

std::string assessment_json(const Assessment& a, const ScenarioConfig& cfg) {
  const auto& d = a.decision;
  ordered_json j{{"model", to_string(cfg.model)},
                 {"verdict", spt::to_string(d.verdict)},
                 {"epsilon", d.epsilon},
                 {"eps_star", number(d.eps_star)},
                 {"eps_double_star", number(d.eps_double_star)},
                 {"settle_time_T", d.settle_time_T},
                 {"bounds",
                  {{"mu", a.bounds.mu},
                   {"b3", a.bounds.b3},
                   {"b5", a.bounds.b5},
                   {"b6", a.bounds.b6},
                   {"k0", a.bounds.k0},
                   {"a", a.bounds.a},
                   {"k1", a.bounds.k1}}}};
  return j.dump(2) + "\n";
}

}  // namespace lsor::harness
