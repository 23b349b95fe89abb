#include "gpfunnel/sim.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace gpfunnel {

Plant case_study_plant() {
  Plant p;
  p.name = "case_study";
  p.drift = [](const Vector& x) {
    const double s = 1.0 / (1.0 + std::exp(-2.0 * x[0])) - 0.5;
    Vector f(2);
    f[0] = x[0] + (std::cos(x[0]) - 1.0) * x[1];
    f[1] = -s + x[1];
    return f;
  };
  p.input_map = [](const Vector&) -> Matrix { return Matrix::Identity(2, 2); };
  p.box = StateBox::cube(2, -5.0, 5.0);
  p.input_dim = 2;
  return p;
}

Plant make_plant(const std::string& name) {
  if (name == "case_study") return case_study_plant();
  throw InputError("unknown plant '" + name + "' (available: case_study)");
}

std::string to_string(SamplingMode mode) {
  return mode == SamplingMode::uniform ? "uniform" : "trajectory";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "uniform") return SamplingMode::uniform;
  if (name == "trajectory") return SamplingMode::trajectory;
  throw InputError("unknown sampling mode '" + name + "' (expected uniform or trajectory)");
}

std::string to_string(Integrator integrator) {
  return integrator == Integrator::rk4 ? "rk4" : "euler";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "rk4") return Integrator::rk4;
  if (name == "euler") return Integrator::euler;
  throw InputError("unknown integrator '" + name + "' (expected rk4 or euler)");
}

namespace {

Vector uniform_in(const StateBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector u(box.dim());
  for (Index j = 0; j < u.size(); ++j) u[j] = unit(rng);
  return box.from_unit(u);
}

Vector rk4_step(const std::function<Vector(const Vector&, double)>& rhs, const Vector& x, double t,
                double dt) {
  const Vector k1 = rhs(x, t);
  const Vector k2 = rhs(x + 0.5 * dt * k1, t + 0.5 * dt);
  const Vector k3 = rhs(x + 0.5 * dt * k2, t + 0.5 * dt);
  const Vector k4 = rhs(x + dt * k3, t + dt);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Dataset sample_measurements(const Plant& plant, const StateBox& box, Index samples, double noise_std,
                            std::uint64_t seed, SamplingMode mode) {
  if (samples < 1) throw DomainError("need at least one measurement");
  if (!(noise_std >= 0.0)) throw DomainError("noise_std must be >= 0");
  if (!box.has_interior()) throw DomainError("sampling box needs an interior");

  std::mt19937_64 rng(seed);
  const Index n = box.dim();
  Matrix inputs(samples, n);
  if (mode == SamplingMode::uniform) {
    for (Index k = 0; k < samples; ++k) inputs.row(k) = uniform_in(box, rng).transpose();
  } else {
    // Uncontrolled runs, sampled every 0.1 s until they leave the box.
    const auto rhs = [&](const Vector& x, double) { return plant.drift(x); };
    constexpr double dt = 0.01;
    constexpr int stride = 10;
    constexpr int per_run = 20;
    Index k = 0;
    while (k < samples) {
      Vector x = uniform_in(box, rng);
      for (int s = 0; s < per_run && k < samples && box.contains(x); ++s) {
        inputs.row(k++) = x.transpose();
        for (int j = 0; j < stride; ++j) x = rk4_step(rhs, x, 0.0, dt);
      }
    }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix targets(samples, n);
  for (Index k = 0; k < samples; ++k) {
    Vector y = plant.drift(inputs.row(k).transpose());
    if (noise_std > 0.0) {
      for (Index i = 0; i < n; ++i) y[i] += noise_std * noise(rng);
    }
    targets.row(k) = y.transpose();
  }
  return {inputs, targets, noise_std};
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !(t_max >= dt) || !std::isfinite(t_max)) {
    throw DomainError("simulation needs 0 < dt <= t_max");
  }
  if (stop_on_reach && !goal) throw DomainError("stop_on_reach needs a goal box");
}

FunnelExit::FunnelExit(std::size_t step, double time, const OutsideFunnel& cause, Trajectory partial)
    : Error("funnel exit at step " + std::to_string(step) + " (t = " + std::to_string(time) +
            "): " + cause.what()),
      step_(step),
      time_(time),
      dim_(cause.dim()),
      upper_(cause.upper()),
      partial_(std::move(partial)) {}

Trajectory integrate(const Plant& plant, const ControlLaw& law, const Vector& x0, const SimConfig& cfg) {
  cfg.validate();
  if (x0.size() != plant.state_dim()) throw DomainError("initial state has the wrong dimension");
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(cfg.t_max / cfg.dt - 1e-9)));
  const FunnelSpec& spec = law.spec();

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);

  auto record = [&](const Vector& x, double t, std::size_t step) {
    ControlEvaluation ev;
    try {
      ev = law.evaluate(x, t);
    } catch (const OutsideFunnel& e) {
      traj.reach_time = cfg.goal ? reach_check(traj, *cfg.goal) : std::nullopt;
      throw FunnelExit(step, t, e, std::move(traj));
    }
    const StateBox bounds = spec.box(t);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.inputs.push_back(ev.input);
    traj.xi.push_back(ev.error.xi);
    traj.lyapunov.push_back(0.5 * ev.error.xi.squaredNorm());
    traj.lyapunov_bound.push_back(-ev.error.xi.dot(ev.error.phi.cwiseProduct(ev.error.xi)));
    traj.lower.push_back(bounds.lower());
    traj.upper.push_back(bounds.upper());
  };

  std::size_t step = 0;
  const auto rhs = [&](const Vector& x, double t) -> Vector {
    try {
      return plant.drift(x) + plant.input_map(x) * law.control(x, t);
    } catch (const OutsideFunnel& e) {
      traj.reach_time = cfg.goal ? reach_check(traj, *cfg.goal) : std::nullopt;
      throw FunnelExit(step, t, e, std::move(traj));
    }
  };

  Vector x = x0;
  record(x, 0.0, 0);
  for (step = 0; step < steps; ++step) {
    if (cfg.stop_on_reach && cfg.goal->contains(x)) break;
    const double t = static_cast<double>(step) * cfg.dt;
    x = cfg.integrator == Integrator::rk4 ? rk4_step(rhs, x, t, cfg.dt) : Vector(x + cfg.dt * rhs(x, t));
    if (!x.allFinite()) {
      throw NumericalBlowup("non-finite state at step " + std::to_string(step + 1));
    }
    record(x, static_cast<double>(step + 1) * cfg.dt, step + 1);
  }
  if (cfg.goal) traj.reach_time = reach_check(traj, *cfg.goal);
  return traj;
}

std::optional<double> reach_check(const Trajectory& traj, const StateBox& goal) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (goal.contains(traj.states[k])) return traj.times[k];
  }
  return std::nullopt;
}

FunnelAudit funnel_audit(const Trajectory& traj, const FunnelSpec& spec) {
  FunnelAudit audit;
  audit.min_margin = std::numeric_limits<double>::infinity();
  audit.margins.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector& x = traj.states[k];
    Vector m(spec.dim());
    for (Index i = 0; i < spec.dim(); ++i) {
      const double w = spec.width(i, traj.times[k]);
      const double e = x[i] - spec.attractor[i];
      m[i] = std::min(spec.upper_ratio[i] * w - e, e + spec.lower_ratio[i] * w);
      if (m[i] <= 0.0) audit.violations.push_back({k, i, m[i]});
    }
    audit.min_margin = std::min(audit.min_margin, m.minCoeff());
    audit.margins.push_back(std::move(m));
  }
  return audit;
}

}  // namespace gpfunnel
