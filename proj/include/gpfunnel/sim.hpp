#pragma once

#include "gpfunnel/controller.hpp"
#include "gpfunnel/errors.hpp"
#include "gpfunnel/gp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gpfunnel {

/// Control-affine plant x' = f(x) + g(x) u. The drift is ground truth: it is used to
/// generate data and to simulate, never by the controller.
struct Plant {
  std::string name;
  Dynamics drift;
  InputMap input_map;
  StateBox box;
  Index input_dim = 0;

  Index state_dim() const { return box.dim(); }
};

/// f1 = x1 + (cos x1 - 1) x2, f2 = -s(x1) + x2 with s(z) = 1/(1 + e^{-2z}) - 1/2,
/// g = I, X = [-5, 5]^2.
Plant case_study_plant();

/// Plant registry used by the CLI ("case_study").
Plant make_plant(const std::string& name);

enum class SamplingMode {
  uniform,     // i.i.d. uniform states over the box
  trajectory,  // states visited by uncontrolled runs from random starts
};

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

Dataset sample_measurements(const Plant& plant, const StateBox& box, Index samples, double noise_std,
                            std::uint64_t seed, SamplingMode mode = SamplingMode::uniform);

enum class Integrator { rk4, euler };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct SimConfig {
  double dt = 1e-3;
  double t_max = 10.0;
  Integrator integrator = Integrator::rk4;
  bool stop_on_reach = true;
  /// Required when stop_on_reach is set; also used to fill Trajectory::reach_time.
  std::optional<StateBox> goal;
  /// Recorded with the run. The closed loop itself is deterministic.
  std::uint64_t seed = 0;

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> xi;
  std::vector<double> lyapunov;        // V = |xi|^2 / 2
  std::vector<double> lyapunov_bound;  // -xi^T Phi_t xi
  std::vector<Vector> lower;           // funnel bounds at each time
  std::vector<Vector> upper;
  std::optional<double> reach_time;

  std::size_t size() const { return times.size(); }
};

/// The state left the funnel during integration.
class FunnelExit : public Error {
 public:
  FunnelExit(std::size_t step, double time, const OutsideFunnel& cause, Trajectory partial);
  std::size_t step() const { return step_; }
  double time() const { return time_; }
  std::size_t dim() const { return dim_; }
  bool upper() const { return upper_; }
  const Trajectory& partial() const { return partial_; }

 private:
  std::size_t step_;
  double time_;
  std::size_t dim_;
  bool upper_;
  Trajectory partial_;
};

/// Fixed-step integration of x' = f(x) + g(x) u(x, t); the law is evaluated at every
/// stage state. Stops at t_max, on reaching the goal (if requested) or on FunnelExit.
Trajectory integrate(const Plant& plant, const ControlLaw& law, const Vector& x0, const SimConfig& cfg);

/// First recorded time at which the state lies in the goal box.
std::optional<double> reach_check(const Trajectory& traj, const StateBox& goal);

struct FunnelViolation {
  std::size_t step = 0;
  Index dim = 0;
  double margin = 0.0;
};

struct FunnelAudit {
  /// margins[k][i] = min(d_i w_i - (x_i - eta_i), (x_i - eta_i) + c_i w_i)
  std::vector<Vector> margins;
  double min_margin = 0.0;
  std::vector<FunnelViolation> violations;

  bool ok() const { return violations.empty(); }
};

FunnelAudit funnel_audit(const Trajectory& traj, const FunnelSpec& spec);

}  // namespace gpfunnel
