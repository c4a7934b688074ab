#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "lsor/errors.hpp"
#include "lsor/harness.hpp"

namespace lsor::harness {

using numerics::InputSignal;
using odesolve::OdeProblem;
using odesolve::Trajectory;

namespace {

std::vector<double> output_grid(const ScenarioConfig& cfg) {
  const auto n = static_cast<long>(std::llround(cfg.t_end / cfg.grid_step));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 2);
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * cfg.grid_step;
    if (t >= cfg.t_end) break;
    grid.push_back(t);
  }
  grid.push_back(cfg.t_end);
  return grid;
}

std::vector<double> breakpoints_inside(const ScenarioConfig& cfg) {
  std::vector<double> out;
  for (double b : cfg.sag.breakpoints())
    if (b > 0.0 && b < cfg.t_end) out.push_back(b);
  return out;
}

InputSignal sag_input(const ScenarioConfig& cfg, double second_channel) {
  const SagParams sag = cfg.sag;
  return InputSignal(
      [sag, second_channel](double t) {
        Vector u(2);
        u << sag_voltage(t, sag), second_channel;
        return u;
      },
      0.0, cfg.t_end, breakpoints_inside(cfg));
}

// Largest |du/dt| of the sag ramp.
double sag_rate_bound(const SagParams& sp) { return (1.0 - sp.d) / (sp.c - sp.b / 60.0); }

std::vector<double> operating_voltages(const SagParams& sp) { return {sp.a, sp.d, 1.0}; }

Trajectory run(const OdeProblem& prob, const ScenarioConfig& cfg, const char* what) {
  try {
    return odesolve::integrate(prob, cfg.solver_config());
  } catch (const StiffnessOrSingularity& e) {
    throw StiffnessOrSingularity(std::string(e.what()) + " [" + what + ", " + to_string(cfg.model) +
                                     ", " + to_string(cfg.solver) + "]",
                                 e.time());
  } catch (const NumericalBlowup& e) {
    throw NumericalBlowup(std::string(e.what()) + " [" + what + ", " + to_string(cfg.model) + "]");
  }
}

void sample_states(SimulationResult& r) {
  r.states.reserve(r.times.size());
  for (double t : r.times) r.states.push_back(odesolve::dense_output(r.trajectory, t));
}

Vector slice(const Vector& v, std::span<const Eigen::Index> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[idx[k]];
  return out;
}

// ---- motors ----

struct MotorSetup {
  motor::MotorParams prm;
  InputSignal input;
  motor::MotorInputs u0{1.0, 0.0};
};

MotorSetup motor_setup(const ScenarioConfig& cfg) {
  return {motor_params(cfg), sag_input(cfg, 0.0), {1.0, 0.0}};
}

Vector motor_output_vector(const motor::MotorOutputs& o) {
  Vector v(4);
  v << o.id, o.iq, o.P, o.Q;
  return v;
}

SimulationResult simulate_motor(const ScenarioConfig& cfg, Variant which) {
  const MotorSetup ms = motor_setup(cfg);
  SimulationResult r;
  r.variant = which;
  r.output_names = {"id", "iq", "P", "Q"};
  r.times = output_grid(cfg);

  OdeProblem prob;
  prob.input = ms.input;
  prob.t0 = 0.0;
  prob.tf = cfg.t_end;
  const motor::MotorParams prm = ms.prm;

  if (which == Variant::Full) {
    const motor::MotorEquilibrium eq = motor::motor_initialize(ms.u0, prm, cfg.motor_slip);
    const double tm0 = eq.tm0;
    prob.initial_state = eq.state.to_vector();
    prob.rhs = [prm, tm0](double, const Vector& x, const Vector& u) {
      return motor::motor_full_rhs(motor::MotorFullState::from_vector(x),
                                   motor::MotorInputs::from_vector(u), prm, tm0);
    };
    r.trajectory = run(prob, cfg, "full");
    r.state_names = {"Eq_p", "Ed_p", "Eq_pp", "Ed_pp", "s"};
    sample_states(r);
    for (std::size_t k = 0; k < r.times.size(); ++k)
      r.outputs.push_back(motor_output_vector(motor::motor_outputs(
          motor::MotorFullState::from_vector(r.states[k]),
          motor::MotorInputs::from_vector(ms.input(r.times[k])), prm, tm0)));
  } else {
    const motor::MotorReducedEquilibrium eq =
        motor::motor_initialize_reduced(ms.u0, prm, cfg.motor_slip);
    const double tm0 = eq.tm0;
    prob.initial_state = eq.state.to_vector();
    prob.rhs = [prm, tm0](double, const Vector& x, const Vector& u) {
      return motor::motor_reduced_rhs(motor::MotorReducedState::from_vector(x),
                                      motor::MotorInputs::from_vector(u), prm, tm0);
    };
    r.trajectory = run(prob, cfg, "reduced");
    r.state_names = {"Eq_p", "Ed_p", "s"};
    sample_states(r);
    for (std::size_t k = 0; k < r.times.size(); ++k)
      r.outputs.push_back(motor_output_vector(motor::motor_outputs(
          motor::MotorReducedState::from_vector(r.states[k]),
          motor::MotorInputs::from_vector(ms.input(r.times[k])), prm, tm0)));

    const spt::TwoTimeScaleSystem sys = motor::motor_two_time_scale(prm, tm0);
    for (std::size_t i = 0; i < r.trajectory.times.size(); ++i) {
      const Vector& x = r.trajectory.states[i];
      const Vector u = ms.input(r.trajectory.times[i]);
      r.qss_residual_max = std::max(r.qss_residual_max, spt::qss_residual(sys, x, u, sys.qss(x, u)));
    }
  }
  r.integration_seconds = r.trajectory.stats.wall_clock;
  return r;
}

// ---- DER_A ----

struct DeraSetup {
  dera::DeraParams prm;
  dera::DeraFullState init;
  InputSignal input;
  dera::DeraInputs u0;
};

DeraSetup dera_setup(const ScenarioConfig& cfg) {
  const double f = dera::hz_to_pu(cfg.frequency_hz);
  const dera::DeraInputs u0{1.0, f};
  const dera::DeraInitialization init =
      dera::dera_initialize(u0, dera_params(cfg), cfg.dera_P0, cfg.dera_Q0);
  return {init.params, init.state, sag_input(cfg, f), u0};
}

bool multiplier_state_changed(const numerics::ProtectionMemory& a,
                              const numerics::ProtectionMemory& b) {
  return a.available != b.available || a.latched != b.latched || a.in_excursion != b.in_excursion;
}

odesolve::StepObserver protection_observer(const dera::DeraParams& prm,
                                           std::shared_ptr<numerics::ProtectionMemory> mem) {
  return [prm, mem](double t, const Vector& x, const Vector&) {
    const numerics::ProtectionMemory next = dera::dera_step_protection(x[0], t, prm, *mem);
    const bool changed = multiplier_state_changed(next, *mem);
    *mem = next;
    return changed;
  };
}

// Memory in force on (times[i-1], times[i]]: replays the observer over the
// accepted steps.
class MemoryHistory {
 public:
  MemoryHistory(const Trajectory& traj, const dera::DeraParams& prm) : times_(traj.times) {
    numerics::ProtectionMemory m;
    before_.reserve(traj.times.size());
    before_.push_back(m);
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
      before_.push_back(m);
      m = dera::dera_step_protection(traj.states[i][0], traj.times[i], prm, m);
    }
  }

  const numerics::ProtectionMemory& at(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.end()) return before_.back();
    return before_[static_cast<std::size_t>(it - times_.begin())];
  }

 private:
  std::vector<double> times_;
  std::vector<numerics::ProtectionMemory> before_;
};

Vector dera_output_vector(double iq, double id, const dera::DeraInputs& u) {
  const dera::DeraPower pw = dera::dera_outputs(iq, id, u);
  Vector v(4);
  v << iq, id, pw.P, pw.Q;
  return v;
}

struct LayerPiece {
  double t_begin = 0.0;
  double t_end = 0.0;
  bool active = false;
  Trajectory traj;
};

SimulationResult simulate_dera(const ScenarioConfig& cfg, Variant which, spt::Verdict verdict) {
  const DeraSetup ds = dera_setup(cfg);
  const dera::DeraParams prm = ds.prm;
  SimulationResult r;
  r.variant = which;
  r.output_names = {"iq", "id", "P", "Q"};
  r.times = output_grid(cfg);

  auto mem = std::make_shared<numerics::ProtectionMemory>();
  OdeProblem prob;
  prob.input = ds.input;
  prob.t0 = 0.0;
  prob.tf = cfg.t_end;
  prob.on_accepted_step = protection_observer(prm, mem);

  if (which == Variant::Full) {
    prob.initial_state = ds.init.to_vector();
    prob.rhs = [prm, mem](double, const Vector& x, const Vector& u) {
      return dera::dera_full_rhs(dera::DeraFullState::from_vector(x),
                                 dera::DeraInputs::from_vector(u), prm, *mem);
    };
    r.trajectory = run(prob, cfg, "full");
    r.integration_seconds = r.trajectory.stats.wall_clock;
    r.state_names = {"S0", "S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8", "S9"};
    sample_states(r);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      const auto u = dera::DeraInputs::from_vector(ds.input(r.times[k]));
      r.outputs.push_back(dera_output_vector(r.states[k][3], r.states[k][9], u));
    }
    return r;
  }

  prob.initial_state = slice(ds.init.to_vector(), dera::kSlowIndices);
  prob.rhs = [prm](double, const Vector& x, const Vector& u) {
    return dera::dera_reduced_rhs(dera::DeraReducedState::from_vector(x),
                                  dera::DeraInputs::from_vector(u), prm);
  };
  r.trajectory = run(prob, cfg, "reduced");
  r.integration_seconds = r.trajectory.stats.wall_clock;
  r.state_names = {"S0", "S1", "S5", "S7"};
  sample_states(r);

  const MemoryHistory history(r.trajectory, prm);
  auto layer_mem = std::make_shared<numerics::ProtectionMemory>();
  const spt::TwoTimeScaleSystem sys = dera::dera_two_time_scale(prm, layer_mem);

  // Boundary-layer correction, restarted at t0 and at every input breakpoint.
  std::vector<double> starts{0.0};
  for (double b : breakpoints_inside(cfg)) starts.push_back(b);
  std::vector<LayerPiece> pieces;
  if (verdict != spt::Verdict::QssOnly) {
    Vector z_before = slice(ds.init.to_vector(), dera::kFastIndices);
    for (std::size_t k = 0; k < starts.size(); ++k) {
      LayerPiece piece;
      piece.t_begin = starts[k];
      piece.t_end = k + 1 < starts.size() ? starts[k + 1] : cfg.t_end;
      const Vector x = odesolve::dense_output(r.trajectory, piece.t_begin);
      *layer_mem = history.at(piece.t_begin);
      if (k > 0) {
        const Vector u_left = ds.input(std::nextafter(piece.t_begin, -1.0));
        const LayerPiece& prev = pieces.back();
        Vector y_left = Vector::Zero(6);
        if (prev.active) y_left = odesolve::dense_output(prev.traj, piece.t_begin - prev.t_begin);
        z_before = sys.qss(x, u_left) + y_left;
      }
      const Vector u = ds.input(piece.t_begin);
      const Vector y0 = z_before - sys.qss(x, u);
      if (y0.lpNorm<Eigen::Infinity>() > 1e-12) {
        OdeProblem layer = spt::fast_deviation_problem(sys, x, u, y0, piece.t_end - piece.t_begin);
        piece.traj = run(layer, cfg, "boundary layer");
        piece.active = true;
        r.integration_seconds += piece.traj.stats.wall_clock;
        ++r.boundary_layer_runs;
      }
      pieces.push_back(std::move(piece));
    }
  }

  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const double t = r.times[k];
    const auto u = dera::DeraInputs::from_vector(ds.input(t));
    dera::DeraBoundaryState y;
    for (const LayerPiece& p : pieces) {
      const bool inside = t >= p.t_begin && (t < p.t_end || (p.t_end == cfg.t_end && t <= p.t_end));
      if (inside && p.active) {
        y = dera::DeraBoundaryState::from_vector(
            odesolve::dense_output(p.traj, std::min(t - p.t_begin, p.traj.times.back())));
      }
    }
    const dera::DeraCurrents c = dera::dera_currents(dera::DeraReducedState::from_vector(r.states[k]),
                                                     y, u, prm, history.at(t));
    r.outputs.push_back(dera_output_vector(c.iq, c.id, u));
  }

  for (std::size_t i = 0; i < r.trajectory.times.size(); ++i) {
    const Vector& x = r.trajectory.states[i];
    const Vector u = ds.input(r.trajectory.times[i]);
    *layer_mem = history.at(r.trajectory.times[i]);
    r.qss_residual_max = std::max(r.qss_residual_max, spt::qss_residual(sys, x, u, sys.qss(x, u)));
  }
  return r;
}

}  // namespace

spt::TwoTimeScaleSystem two_time_scale_system(const ScenarioConfig& cfg) {
  cfg.validate();
  if (is_motor(cfg.model)) {
    const MotorSetup ms = motor_setup(cfg);
    const motor::MotorEquilibrium eq = motor::motor_initialize(ms.u0, ms.prm, cfg.motor_slip);
    return motor::motor_two_time_scale(ms.prm, eq.tm0);
  }
  const DeraSetup ds = dera_setup(cfg);
  return dera::dera_two_time_scale(ds.prm, std::make_shared<const numerics::ProtectionMemory>());
}

double motor_decay_fixture() { return spt::decay_rate_from_pair(0.012, 0.035); }
double dera_decay_fixture() { return spt::decay_rate_from_pair(0.242, 0.06); }

Assessment assess_model(const ScenarioConfig& cfg) {
  cfg.validate();
  const spt::TwoTimeScaleSystem sys = two_time_scale_system(cfg);
  Vector x0;
  spt::DecayFit decay;
  decay.k1 = 1.0;
  if (is_motor(cfg.model)) {
    const MotorSetup ms = motor_setup(cfg);
    const motor::MotorEquilibrium eq = motor::motor_initialize(ms.u0, ms.prm, cfg.motor_slip);
    x0 = slice(eq.state.to_vector(), motor::kSlowIndices);
    decay.a = motor_decay_fixture();
  } else {
    const DeraSetup ds = dera_setup(cfg);
    x0 = slice(ds.init.to_vector(), dera::kSlowIndices);
    decay.a = dera_decay_fixture();
  }
  const double second = is_motor(cfg.model) ? 0.0 : dera::hz_to_pu(cfg.frequency_hz);
  std::vector<spt::OperatingSample> samples;
  double u_norm = 0.0;
  for (double v : operating_voltages(cfg.sag)) {
    Vector u(2);
    u << v, second;
    u_norm = std::max(u_norm, u.norm());
    samples.push_back({x0, u});
  }
  const double mu = std::max({x0.norm(), u_norm, sag_rate_bound(cfg.sag)});
  Assessment a;
  a.bounds = spt::estimate_bounds(sys, samples, mu, decay);
  a.decision = spt::assess(sys, a.bounds, cfg.settle_time);
  return a;
}

SimulationResult simulate(const ScenarioConfig& cfg, Variant which) {
  cfg.validate();
  if (which == Variant::Both) throw ConfigError("simulate runs one variant at a time");
  if (is_motor(cfg.model)) return simulate_motor(cfg, which);
  const spt::Verdict verdict =
      which == Variant::Reduced ? assess_model(cfg).decision.verdict : spt::Verdict::QssOnly;
  return simulate_dera(cfg, which, verdict);
}

}  // namespace lsor::harness
