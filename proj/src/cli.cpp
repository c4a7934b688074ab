#include "lsor/cli.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lsor/errors.hpp"
#include "lsor/harness.hpp"

namespace lsor {

namespace {

using harness::ScenarioConfig;

struct CommonFlags {
  std::string model = "motor-a";
  std::string variant;
  std::string solver;
  double t_end = 0.0;
  double grid = 0.0;
  std::string sag;
  std::string config;
  std::string out;
  std::string format;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double settle_time = 0.0;
  int repeat = 5;

  CLI::Option* variant_opt = nullptr;
  CLI::Option* solver_opt = nullptr;
  CLI::Option* t_end_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* sag_opt = nullptr;
  CLI::Option* rel_opt = nullptr;
  CLI::Option* abs_opt = nullptr;
  CLI::Option* settle_opt = nullptr;
  CLI::Option* model_opt = nullptr;
};

void add_flags(CLI::App* sub, CommonFlags& f, bool with_variant, bool with_repeat) {
  f.model_opt = sub->add_option("--model", f.model, "motor-a | motor-b | motor-c | dera")
                    ->check(CLI::IsMember({"motor-a", "motor-b", "motor-c", "dera"}));
  if (with_variant)
    f.variant_opt = sub->add_option("--variant", f.variant, "full | reduced")
                        ->check(CLI::IsMember({"full", "reduced"}));
  f.solver_opt = sub->add_option("--solver", f.solver, "nonstiff | stiff")
                     ->check(CLI::IsMember({"nonstiff", "stiff"}));
  f.t_end_opt = sub->add_option("--t-end", f.t_end, "simulation horizon in seconds");
  f.grid_opt = sub->add_option("--grid", f.grid, "output grid step in seconds");
  f.sag_opt = sub->add_option("--sag", f.sag, "sag parameters a,b,c,d");
  f.rel_opt = sub->add_option("--rel-tol", f.rel_tol, "relative tolerance");
  f.abs_opt = sub->add_option("--abs-tol", f.abs_tol, "absolute tolerance");
  f.settle_opt = sub->add_option("--settle-time", f.settle_time, "required settle time T in seconds");
  sub->add_option("--config", f.config, "flat JSON configuration file");
  sub->add_option("--out", f.out, "output path (default: standard output)");
  sub->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  if (with_repeat)
    sub->add_option("--repeat", f.repeat, "number of repeats")->check(CLI::PositiveNumber);
}

std::string number_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

ScenarioConfig build_config(const CommonFlags& f) {
  ScenarioConfig cfg;
  if (!f.config.empty()) cfg = harness::load_config(f.config, cfg);
  if (f.model_opt->count() || f.config.empty()) cfg.model = harness::parse_model(f.model);
  if (f.variant_opt && f.variant_opt->count()) cfg.variant = harness::parse_variant(f.variant);
  if (f.solver_opt->count()) cfg.solver = harness::parse_method(f.solver);
  if (f.t_end_opt->count()) cfg.t_end = f.t_end;
  if (f.grid_opt->count()) cfg.grid_step = f.grid;
  if (f.rel_opt->count()) cfg.rel_tol = f.rel_tol;
  if (f.abs_opt->count()) cfg.abs_tol = f.abs_tol;
  if (f.settle_opt->count()) cfg.settle_time = f.settle_time;
  if (f.sag_opt->count()) {
    std::vector<std::string> parts;
    std::stringstream ss(f.sag);
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    if (parts.size() != 4) throw ConfigError("--sag expects four comma-separated values a,b,c,d");
    const char* keys[] = {"sag.a", "sag.b", "sag.c", "sag.d"};
    for (int i = 0; i < 4; ++i) harness::apply_setting(cfg, keys[i], parts[static_cast<std::size_t>(i)]);
  }
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    harness::write_text(path, text);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_simulate(const CommonFlags& f, std::ostream& out) {
  ScenarioConfig cfg = build_config(f);
  const harness::Variant which =
      cfg.variant == harness::Variant::Both ? harness::Variant::Full : cfg.variant;
  cfg.variant = which;
  const harness::SimulationResult r = harness::simulate(cfg, which);
  if (f.format == "json") {
    emit(harness::simulation_json(r, cfg), f.out, out);
  } else {
    std::ostringstream os;
    harness::export_csv(r, os);
    emit(os.str(), f.out, out);
  }
  return 0;
}

int run_compare(const CommonFlags& f, std::ostream& out) {
  const ScenarioConfig cfg = build_config(f);
  const harness::ComparisonResult r = harness::run_comparison(cfg);
  emit(harness::report_json(r.report, cfg), f.out, out);
  return 0;
}

int run_assess(const CommonFlags& f, std::ostream& out) {
  const ScenarioConfig cfg = build_config(f);
  const harness::Assessment a = harness::assess_model(cfg);
  if (f.format == "json") {
    emit(harness::assessment_json(a, cfg), f.out, out);
    return 0;
  }
  const auto& d = a.decision;
  std::ostringstream os;
  os << "model: " << harness::to_string(cfg.model) << '\n'
     << "verdict: " << spt::to_string(d.verdict) << '\n'
     << "epsilon: " << number_text(d.epsilon) << '\n'
     << "eps_star: " << number_text(d.eps_star) << '\n'
     << "eps_double_star: "
     << (d.eps_double_star_available ? number_text(d.eps_double_star) : std::string("none")) << '\n'
     << "settle_time_T: " << number_text(d.settle_time_T) << '\n';
  emit(os.str(), f.out, out);
  return 0;
}

int run_bench(const CommonFlags& f, std::ostream& out) {
  const ScenarioConfig cfg = build_config(f);
  std::vector<double> full, reduced, speedup;
  harness::ComparisonResult last;
  for (int i = 0; i < f.repeat; ++i) {
    last = harness::run_comparison(cfg);
    full.push_back(last.report.timing_full);
    reduced.push_back(last.report.timing_reduced);
    speedup.push_back(last.report.speedup);
  }
  nlohmann::ordered_json j{{"model", harness::to_string(cfg.model)},
                           {"solver", harness::to_string(cfg.solver)},
                           {"repeat", f.repeat},
                           {"median_timing_full", median(full)},
                           {"median_timing_reduced", median(reduced)},
                           {"median_speedup", median(speedup)},
                           {"steps_full", last.report.stats_full.steps_accepted},
                           {"steps_reduced", last.report.stats_reduced.steps_accepted},
                           {"mse_P", last.report.mse_P},
                           {"mse_Q", last.report.mse_Q}};
  emit(j.dump(2) + "\n", f.out, out);
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Large-signal order reduction of composite load components"};
  app.require_subcommand(1);
  CommonFlags sim, cmp, asr, bench;
  CLI::App* s_sim = app.add_subcommand("simulate", "integrate one model variant and export it");
  CLI::App* s_cmp = app.add_subcommand("compare", "full vs reduced comparison report");
  CLI::App* s_asr = app.add_subcommand("assess", "reduction verdict for a model");
  CLI::App* s_bench = app.add_subcommand("bench", "repeat compare and report median timings");
  add_flags(s_sim, sim, true, false);
  add_flags(s_cmp, cmp, false, false);
  add_flags(s_asr, asr, false, false);
  add_flags(s_bench, bench, false, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (s_sim->parsed()) return run_simulate(sim, out);
    if (s_cmp->parsed()) return run_compare(cmp, out);
    if (s_asr->parsed()) return run_assess(asr, out);
    return run_bench(bench, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << e.kind() << ": " << e.what() << '\n';
    return 2;
  }
}

}  // namespace lsor
