#include <cmath>

#include "lsor/errors.hpp"
#include "lsor/harness.hpp"

namespace lsor::harness {

double mean_squared_error(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("MSE needs equally long sequences");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

namespace {

std::vector<double> output_column(const SimulationResult& r, const std::string& name) {
  Eigen::Index col = -1;
  for (std::size_t k = 0; k < r.output_names.size(); ++k)
    if (r.output_names[k] == name) col = static_cast<Eigen::Index>(k);
  if (col < 0) throw DomainError("no output named " + name);
  std::vector<double> out;
  out.reserve(r.outputs.size());
  for (const Vector& v : r.outputs) out.push_back(v[col]);
  return out;
}

std::vector<double> state_column(const SimulationResult& r, std::size_t col) {
  std::vector<double> out;
  out.reserve(r.states.size());
  for (const Vector& v : r.states) out.push_back(v[static_cast<Eigen::Index>(col)]);
  return out;
}

}  // namespace

ComparisonResult run_comparison(const ScenarioConfig& cfg) {
  cfg.validate();
  ComparisonResult res;
  res.report.verdict = assess_model(cfg).decision.verdict;
  res.full = simulate(cfg, Variant::Full);
  res.reduced = simulate(cfg, Variant::Reduced);

  ComparisonReport& rep = res.report;
  rep.mse_P = mean_squared_error(output_column(res.full, "P"), output_column(res.reduced, "P"));
  rep.mse_Q = mean_squared_error(output_column(res.full, "Q"), output_column(res.reduced, "Q"));
  for (std::size_t j = 0; j < res.reduced.state_names.size(); ++j) {
    const std::string& name = res.reduced.state_names[j];
    for (std::size_t i = 0; i < res.full.state_names.size(); ++i)
      if (res.full.state_names[i] == name)
        rep.state_mse[name] =
            mean_squared_error(state_column(res.full, i), state_column(res.reduced, j));
  }
  rep.timing_full = res.full.integration_seconds;
  rep.timing_reduced = res.reduced.integration_seconds;
  rep.speedup = rep.timing_reduced > 0.0 ? rep.timing_full / rep.timing_reduced
                                         : std::numeric_limits<double>::infinity();
  rep.stats_full = res.full.trajectory.stats;
  rep.stats_reduced = res.reduced.trajectory.stats;
  rep.qss_residual_max = res.reduced.qss_residual_max;
  return res;
}

}  // namespace lsor::harness
