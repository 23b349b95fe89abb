#pragma once

// The command-line stages as library calls. Each stage reads what the previous one wrote
// into the output directory and writes its own artifacts there:
//
//   learn       dataset.csv, model.ini, fit_report.txt
//   calibrate   bounds.ini, calibration.txt (+ coverage.csv, coverage.txt for monte_carlo)
//   synthesize  funnel.ini, funnel_table.txt, funnel_bounds.csv
//   simulate    trajectory_NN.csv, audit.csv, simulate.txt, state_space.svg, funnel_time.svg
//   reproduce   all of the above plus summary.csv and metadata.txt
//
// Only metadata.txt carries timestamps; everything else is a function of config and seed.

#include "gpfunnel/bounds.hpp"
#include "gpfunnel/config.hpp"
#include "gpfunnel/funnel.hpp"
#include "gpfunnel/gp.hpp"
#include "gpfunnel/sim.hpp"

#include <exception>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gpfunnel {

struct LearnResult {
  std::shared_ptr<const GPModel> model;
  std::optional<HyperparamFit> fit;  // absent when fitting was off
  Vector sigma_bar;                  // grid max of the posterior std
  Vector grid_cell;
  std::string report;
};

struct CalibrateResult {
  BoundSet bounds;
  Vector sigma_bar;
  std::optional<CoverageReport> coverage;   // monte_carlo
  std::optional<double> common_scale;       // monte_carlo: s with s * sigma_bar at the target coverage
  std::optional<RkhsBound> rkhs;            // probabilistic, deterministic
  std::optional<Vector> gamma;              // probabilistic
  std::vector<std::string> warnings;
  std::string report;
};

struct SynthesizeResult {
  Synthesis synthesis;
  std::string table;
};

struct RunOutcome {
  Vector initial;
  Trajectory trajectory;
  FunnelAudit audit;
  std::optional<std::size_t> exit_step;  // set when the run left the funnel
  std::string exit_message;
  /// lyapunov_check(trajectory, 1e-2)
  double lyapunov_ok_fraction = 0.0;

  bool reached() const { return trajectory.reach_time.has_value(); }
  bool ok() const { return !exit_step && audit.ok(); }
};

struct SimulateResult {
  std::vector<RunOutcome> runs;
  std::string report;

  bool all_ok() const;
  bool all_reached() const;
};

struct ReproduceResult {
  LearnResult learn;
  CalibrateResult calibrate;
  SynthesizeResult synthesize;
  SimulateResult simulate;
  std::string summary_csv;
};

LearnResult cmd_learn(const RunConfig& config, std::ostream& log);
CalibrateResult cmd_calibrate(const RunConfig& config, std::ostream& log);
SynthesizeResult cmd_synthesize(const RunConfig& config, std::ostream& log);
SimulateResult cmd_simulate(const RunConfig& config, std::ostream& log);

/// Configuration used by `reproduce`: the defaults with fitting off, so the published
/// hyperparameters are used verbatim, and Monte-Carlo calibration.
RunConfig case_study_config(std::uint64_t seed);

/// learn -> calibrate (monte_carlo, plus the deterministic comparison) -> synthesize ->
/// simulate. A failing stage is rethrown as StageFailure naming the stage.
ReproduceResult cmd_reproduce_case_study(const RunConfig& config, std::ostream& log);

class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::exception& cause, std::exception_ptr original = nullptr);
  const std::string& stage() const { return stage_; }
  /// The exception the stage threw, for callers that classify failures by type.
  std::exception_ptr original() const { return original_; }

 private:
  std::string stage_;
  std::exception_ptr original_;
};

/// Initial states for `simulate`: config.sim.initial, or a grid x grid lattice over the start box.
std::vector<Vector> initial_states(const RunConfig& config);

/// Fraction of steps k with (V_{k+1} - V_k) / dt <= b_k + tolerance, where b_k averages the
/// decrement bound -xi^T Phi_t xi over the two ends of the step.
double lyapunov_check(const Trajectory& traj, double tolerance);

/// Published case-study values the reproduction is compared against.
struct PublishedValues {
  static constexpr double sigma_bar[2] = {0.022, 0.0616};
  static constexpr double sigma_bar_max = 0.0616;
  static constexpr double coverage_interval[2] = {0.9894, 0.9907};
  static constexpr double beta_deterministic[2] = {7.0878, 7.0710};
  static constexpr double deterministic_envelope[2] = {0.1559, 0.4366};
  static constexpr double monte_carlo_envelope[2] = {0.016, 0.0442};
  static constexpr double envelope_threshold = 0.04;
};

}  // namespace gpfunnel
