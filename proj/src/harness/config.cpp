#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "lsor/errors.hpp"
#include "lsor/harness.hpp"

namespace lsor::harness {

namespace {

using MotorField = double motor::MotorParams::*;
using DeraField = double dera::DeraParams::*;
using FlagField = bool dera::DeraFlags::*;
using VpField = double numerics::VoltageProtectionParams::*;

const std::map<std::string, MotorField>& motor_fields() {
  using P = motor::MotorParams;
  static const std::map<std::string, MotorField> m{
      {"rs", &P::rs}, {"Ls", &P::Ls},     {"Lp", &P::Lp}, {"Lpp", &P::Lpp}, {"Tp0", &P::Tp0},
      {"Tpp0", &P::Tpp0}, {"H", &P::H},   {"A", &P::A},   {"B", &P::B},     {"C0", &P::C0},
      {"D", &P::D},   {"Etrq", &P::Etrq}, {"p", &P::p},   {"q", &P::q},     {"omega0", &P::omega0}};
  return m;
}

const std::map<std::string, DeraField>& dera_fields() {
  using P = dera::DeraParams;
  static const std::map<std::string, DeraField> m{
      {"Trv", &P::Trv},     {"Tp", &P::Tp},       {"Tiq", &P::Tiq},     {"Tg", &P::Tg},
      {"Tv", &P::Tv},       {"Trf", &P::Trf},     {"Tpord", &P::Tpord}, {"Kqv", &P::Kqv},
      {"Kpg", &P::Kpg},     {"Kig", &P::Kig},     {"Ddn", &P::Ddn},     {"Dup", &P::Dup},
      {"Gdn", &P::Gdn},     {"Gup", &P::Gup},     {"Vref0", &P::Vref0}, {"pfaref", &P::pfaref},
      {"Qref", &P::Qref},   {"Pref", &P::Pref},   {"Freq_ref", &P::Freq_ref},
      {"Imax", &P::Imax},   {"Iql1", &P::Iql1},   {"Iqh1", &P::Iqh1},   {"Pmin", &P::Pmin},
      {"Pmax", &P::Pmax},   {"dPmin", &P::dPmin}, {"dPmax", &P::dPmax}, {"femin", &P::femin},
      {"femax", &P::femax}, {"dbd1", &P::dbd1},   {"dbd2", &P::dbd2},   {"fdbd1", &P::fdbd1},
      {"fdbd2", &P::fdbd2}, {"Xe", &P::Xe},       {"Vpr", &P::Vpr},     {"sat1_floor", &P::sat1_floor}};
  return m;
}

const std::map<std::string, FlagField>& flag_fields() {
  using F = dera::DeraFlags;
  static const std::map<std::string, FlagField> m{
      {"pf_flag", &F::pf_flag},   {"v_tripflag", &F::v_tripflag}, {"freq_flag", &F::freq_flag},
      {"f_tripflag", &F::f_tripflag}, {"pq_flag", &F::pq_flag},  {"typeflag", &F::typeflag}};
  return m;
}

const std::map<std::string, VpField>& vp_fields() {
  using V = numerics::VoltageProtectionParams;
  static const std::map<std::string, VpField> m{
      {"v_l0", &V::v_l0},   {"v_l1", &V::v_l1},   {"v_h0", &V::v_h0},   {"v_h1", &V::v_h1},
      {"t_vl0", &V::t_vl0}, {"t_vl1", &V::t_vl1}, {"t_vh0", &V::t_vh0}, {"t_vh1", &V::t_vh1},
      {"v_rfrac", &V::v_rfrac}};
  return m;
}

double parse_number(const std::string& key, const std::string& text) {
  if (text == "true") return 1.0;
  if (text == "false") return 0.0;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "' expects a number, got '" + text + "'");
  }
  if (pos != text.size() || !std::isfinite(v))
    throw ConfigError("setting '" + key + "' expects a finite number, got '" + text + "'");
  return v;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

bool is_parameter_key(const std::string& key) {
  if (starts_with(key, "motor.")) return motor_fields().count(key.substr(6)) > 0;
  if (starts_with(key, "dera.flags.")) return flag_fields().count(key.substr(11)) > 0;
  if (starts_with(key, "dera.vp.")) return vp_fields().count(key.substr(8)) > 0;
  if (starts_with(key, "dera.")) return dera_fields().count(key.substr(5)) > 0;
  return false;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
  if (!(grid_step > 0.0 && grid_step <= t_end)) throw ConfigError("grid step must lie in (0, t_end]");
  if (!(rel_tol > 0.0 && abs_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (!(settle_time > 0.0)) throw ConfigError("settle time must be positive");
  if (!(motor_slip > 0.0 && motor_slip < 1.0)) throw ConfigError("motor slip must lie in (0, 1)");
  if (!(frequency_hz > 0.0)) throw ConfigError("frequency must be positive");
  try {
    sag.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& [key, value] : overrides)
    if (!is_parameter_key(key)) throw ConfigError("unknown parameter key '" + key + "'");
}

odesolve::SolverConfig ScenarioConfig::solver_config() const {
  odesolve::SolverConfig sc;
  sc.rel_tol = rel_tol;
  sc.abs_tol = abs_tol;
  sc.method = solver;
  return sc;
}

motor::MotorParams motor_params(const ScenarioConfig& cfg) {
  motor::MotorParams prm;
  switch (cfg.model) {
    case Model::MotorB: prm = motor::MotorParams::motor_b(); break;
    case Model::MotorC: prm = motor::MotorParams::motor_c(); break;
    default: prm = motor::MotorParams::motor_a(); break;
  }
  for (const auto& [key, value] : cfg.overrides)
    if (starts_with(key, "motor.")) prm.*(motor_fields().at(key.substr(6))) = value;
  try {
    prm.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return prm;
}

dera::DeraParams dera_params(const ScenarioConfig& cfg) {
  dera::DeraParams prm = dera::DeraParams::reference();
  for (const auto& [key, value] : cfg.overrides) {
    if (starts_with(key, "dera.flags.")) {
      prm.flags.*(flag_fields().at(key.substr(11))) = value != 0.0;
    } else if (starts_with(key, "dera.vp.")) {
      prm.vp.*(vp_fields().at(key.substr(8))) = value;
    } else if (starts_with(key, "dera.")) {
      prm.*(dera_fields().at(key.substr(5))) = value;
    }
  }
  try {
    prm.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return prm;
}

void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& text) {
  if (key == "model") { cfg.model = parse_model(text); return; }
  if (key == "variant") { cfg.variant = parse_variant(text); return; }
  if (key == "solver") { cfg.solver = parse_method(text); return; }
  static const std::map<std::string, double ScenarioConfig::*> scalars{
      {"t_end", &ScenarioConfig::t_end},
      {"grid", &ScenarioConfig::grid_step},
      {"rel_tol", &ScenarioConfig::rel_tol},
      {"abs_tol", &ScenarioConfig::abs_tol},
      {"settle_time", &ScenarioConfig::settle_time},
      {"motor.slip", &ScenarioConfig::motor_slip},
      {"dera.P0", &ScenarioConfig::dera_P0},
      {"dera.Q0", &ScenarioConfig::dera_Q0},
      {"dera.frequency_hz", &ScenarioConfig::frequency_hz}};
  if (auto it = scalars.find(key); it != scalars.end()) {
    cfg.*(it->second) = parse_number(key, text);
    return;
  }
  static const std::map<std::string, double SagParams::*> sag{
      {"sag.a", &SagParams::a}, {"sag.b", &SagParams::b}, {"sag.c", &SagParams::c},
      {"sag.d", &SagParams::d}};
  if (auto it = sag.find(key); it != sag.end()) {
    cfg.sag.*(it->second) = parse_number(key, text);
    return;
  }
  if (is_parameter_key(key)) {
    cfg.overrides[key] = parse_number(key, text);
    return;
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

ScenarioConfig parse_config(const std::string& json_text, ScenarioConfig base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("configuration must be a flat JSON object");
  for (const auto& [key, value] : doc.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number()) {
      std::ostringstream os;
      os.precision(17);
      os << value.get<double>();
      text = os.str();
    } else {
      throw ConfigError("configuration key '" + key + "' must hold a string, number or boolean");
    }
    apply_setting(base, key, text);
  }
  base.validate();
  return base;
}

ScenarioConfig load_config(const std::string& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace lsor::harness
