#pragma once

#include "gpfunnel/bounds.hpp"
#include "gpfunnel/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gpfunnel {

/// Everything a pipeline run needs. Defaults reproduce the case study. Text form:
///
///   [run]      plant, seed, out
///   [dataset]  path (optional CSV; sampled from the plant when absent), samples, noise_std,
///              sampling (uniform | trajectory)
///   [kernel]   fit, restarts, iterations, jitter, signal_std, lengthscales_1..n
///   [bounds]   method (probabilistic | deterministic | monte_carlo), grid, epsilon, gamma,
///              candidates, rkhs_norm, lipschitz, lipschitz_safety, envelope, threshold, trials, confidence_level,
///              target
///   [funnel]   start_lower, start_upper, goal_lower, goal_upper, decay, shrink, attractor
///   [sim]      dt, t_max, integrator, stop_on_reach, grid, initial, sign_smoothing
///
/// Vectors are whitespace-separated. Unknown keys are errors.
struct RunConfig {
  struct Run {
    std::string plant = "case_study";
    std::uint64_t seed = 38;
    std::filesystem::path out = "out";
  } run;

  struct DatasetSection {
    std::optional<std::filesystem::path> path;
    Index samples = 50;
    double noise_std = 0.01;
    SamplingMode sampling = SamplingMode::uniform;
  } dataset;

  struct Kernel {
    bool fit = true;
    int restarts = 8;
    int iterations = 200;
    double jitter = 0.0;
    /// Initial guess, or the model itself when fit is off. One entry per output.
    Vector signal_std{{316.0, 25.3}};
    std::vector<Vector> lengthscales{Vector{{2.9, 177.0}}, Vector{{1.67, 50.5}}};
  } kernel;

  struct Bounds {
    BoundKind method = BoundKind::monte_carlo;
    int grid = 101;  // max_std grid per axis
    // probabilistic
    double epsilon = 0.01;
    std::optional<Vector> gamma;  // overrides the greedy estimate
    Index candidates = 500;
    std::optional<Vector> rkhs_norm;  // overrides B_i from the Lipschitz estimate
    // deterministic (and probabilistic when rkhs_norm is absent)
    std::optional<Vector> lipschitz;
    /// Multiplies the data-driven Lipschitz estimate, which is a lower estimate.
    double lipschitz_safety = 2.0;
    // monte_carlo
    EnvelopeMode envelope = EnvelopeMode::constant;
    Vector threshold{{0.04, 0.04}};
    std::uint64_t trials = 1'000'000;
    double confidence_level = 1.0 - 1e-10;
    /// Coverage at which the common scale is calibrated for the conservativeness comparison.
    double target = 0.99;
  } bounds;

  struct Funnel {
    Vector start_lower{{-3.0, -3.0}};
    Vector start_upper{{-2.0, -2.0}};
    Vector goal_lower{{1.0, 1.0}};
    Vector goal_upper{{3.0, 3.0}};
    Vector decay{{1.0, 1.0}};
    double shrink = 0.5;
    std::optional<Vector> attractor;
  } funnel;

  struct Sim {
    double dt = 1e-3;
    double t_max = 10.0;
    Integrator integrator = Integrator::rk4;
    bool stop_on_reach = true;
    /// Initial states form a grid x grid lattice over the start box unless `initial` is set.
    int grid = 4;
    std::optional<Vector> initial;
    double sign_smoothing = 0.0;
  } sim;

  StateBox start_box() const { return {funnel.start_lower, funnel.start_upper}; }
  StateBox goal_box() const { return {funnel.goal_lower, funnel.goal_upper}; }

  /// Range and shape checks; throws InputError naming the offending key.
  void validate() const;
};

/// `origin` names the source in error messages.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace gpfunnel
