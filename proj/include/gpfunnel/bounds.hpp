#pragma once

#include "gpfunnel/gp.hpp"
#include "gpfunnel/types.hpp"

#include <cstdint>
#include <limits>
#include <string>

namespace gpfunnel {

enum class BoundKind { probabilistic, deterministic, monte_carlo };

std::string to_string(BoundKind kind);
BoundKind bound_kind_from_string(const std::string& name);

/// Per-dimension scale factors turning the posterior std into an error envelope
/// |f_i(x) - mu_i(x)| <= scale_i * sigma_i(x).
struct BoundSet {
  BoundKind kind = BoundKind::probabilistic;
  Vector scale;
  /// Guaranteed (or estimated, for monte_carlo) probability that the envelope holds.
  Interval confidence{0.0, 1.0};
  /// Confidence parameter of the probabilistic bound; NaN when not applicable.
  double epsilon = std::numeric_limits<double>::quiet_NaN();

  void validate() const;
};

// --- probabilistic bound ---------------------------------------------------

/// beta_i = sqrt(2 ||f_i||^2 + 300 gamma_i log^3((N + 1) / eps)).
double beta_probabilistic(double rkhs_norm, double gamma, Index samples, double epsilon);

BoundSet probabilistic_bound_set(const Vector& rkhs_norm, const Vector& gamma, Index samples,
                                 double epsilon);

enum class InfoGainMethod { greedy_overapprox, user_supplied };

struct InfoGain {
  Vector gamma;
  InfoGainMethod method = InfoGainMethod::user_supplied;
};

struct GreedyInfoGain {
  /// 1/2 log det(I + noise^-2 K_S) of the greedily selected set S.
  double greedy_value = 0.0;
  /// greedy_value / (1 - 1/e): the greedy rule reaches at least (1 - 1/e) of the optimum.
  double gamma = 0.0;
  Index selected = 0;
};

/// Greedy maximization of the information gain of `budget` noisy observations of output
/// `i` under the model's prior kernel, over a uniform candidate grid of roughly
/// `candidates` points in `box`.
GreedyInfoGain info_gain_greedy(const GPModel& model, const StateBox& box, Index budget, Index i,
                                Index candidates = 500);

// --- RKHS norm and deterministic bound -------------------------------------

/// sup over x, x' and j of |dk_i/dx_j| for the SE kernel: s^2 e^{-1/2} / min_j l_j.
double kernel_grad_sup(const SeKernel& kernel);

/// B_i = L_i / sqrt(2 sup |dk_i/dx|) for |f_i(x) - f_i(y)| <= L_i sqrt(||x - y||_inf).
double rkhs_bound(double lipschitz, const KernelParams& params, Index i);

struct RkhsBound {
  Vector bound;            // B_i
  Vector lipschitz;        // L_i
  Vector kernel_grad_sup;  // sup |dk_i/dx|
};

RkhsBound rkhs_bounds(const Vector& lipschitz, const KernelParams& params);

/// max over sample pairs of |y_i(a) - y_i(b)| / sqrt(||a - b||_inf). A lower estimate of the
/// true constant; it does not certify anything.
double estimate_lipschitz_sqrt(const Dataset& data, Index i);

/// sqrt(B_i^2 - y_i^T (K_i + noise^2 I)^-1 y_i + N). The envelope it yields is
/// mu_i - beta~ sigma_i <= f_i <= mu_i + beta~ sigma_i.
double beta_deterministic(double rkhs_bound, const GPModel& model, Index i);

BoundSet deterministic_bound_set(const Vector& rkhs_bound, const GPModel& model);

// --- Monte-Carlo calibration -----------------------------------------------

/// Exact two-sided Clopper-Pearson interval for `hits` successes in `trials`.
Interval clopper_pearson(std::uint64_t hits, std::uint64_t trials, double confidence_level);

enum class EnvelopeMode {
  pointwise,  // |f_i - mu_i| <= value_i * sigma_i(x)
  constant,   // |f_i - mu_i| <= value_i
};

struct Envelope {
  EnvelopeMode mode = EnvelopeMode::constant;
  Vector values;

  static Envelope pointwise(Vector scale) { return {EnvelopeMode::pointwise, std::move(scale)}; }
  static Envelope constant(Vector threshold) { return {EnvelopeMode::constant, std::move(threshold)}; }
};

struct CoverageOptions {
  std::uint64_t trials = 1'000'000;
  double confidence_level = 1.0 - 1e-10;
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency. Results do not depend on this.
  unsigned threads = 0;
};

/// Fraction of uniformly sampled states at which the envelope holds in every dimension.
/// Sampling at finitely many points estimates, but does not prove, the for-all-x event.
struct CoverageReport {
  Envelope envelope;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  Interval interval;
  double confidence_level = 0.0;
  std::uint64_t seed = 0;

  double empirical() const { return trials ? static_cast<double>(hits) / trials : 0.0; }
};

CoverageReport monte_carlo_coverage(const GPModel& model, const Dynamics& truth,
                                    const StateBox& box, const Envelope& envelope,
                                    const CoverageOptions& options = {});

/// Smallest s such that the constant envelope s * reference holds jointly at a fraction
/// >= target of the sampled states (same sample stream as monte_carlo_coverage).
double calibrate_common_scale(const GPModel& model, const Dynamics& truth, const StateBox& box,
                              const Vector& reference, double target,
                              const CoverageOptions& options = {});

/// BoundSet whose pointwise scale turns the constant thresholds into scale_i * sigma_bar_i.
BoundSet monte_carlo_bound_set(const CoverageReport& report, const Vector& sigma_bar);

}  // namespace gpfunnel
