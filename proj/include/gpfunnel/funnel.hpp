#pragma once

#include "gpfunnel/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gpfunnel {

/// Exponentially shrinking funnel per dimension
///   -c_i w_i(t) < x_i - eta_i < d_i w_i(t),   w_i(t) = w0_i e^{-decay_i t} + winf_i.
struct FunnelSpec {
  Vector attractor;     // eta
  Vector width0;        // rho_{i0}
  Vector width_inf;     // rho_{i inf}
  Vector decay;         // epsilon_i
  Vector lower_ratio;   // c_i
  Vector upper_ratio;   // d_i

  Index dim() const { return attractor.size(); }
  /// max_i decay_i
  double decay_max() const { return decay.maxCoeff(); }

  double width(Index i, double t) const;
  double width_rate(Index i, double t) const;
  /// [eta_i - c_i w_i(t), eta_i + d_i w_i(t)]; the funnel is the open interior.
  Interval interval(Index i, double t) const;
  StateBox box(double t) const;
  /// Limit box as t -> infinity.
  StateBox terminal_box() const;

  void validate() const;
};

struct SynthesisOptions {
  /// Per-dimension decay rates (> 0).
  Vector decay;
  /// winf_i = shrink * dist(eta_i, boundary of goal) / max(c_i, d_i), shrink in (0, 1].
  double shrink = 0.5;
  /// Attractor override; must satisfy the admissibility rule.
  std::optional<Vector> attractor;
  /// Default attractors stay this fraction of the goal width away from its boundary.
  double interior_margin = 0.01;
  /// Attractors are nudged so that min(c_i, d_i) >= min_ratio.
  double min_ratio = 1e-3;
};

struct Synthesis {
  FunnelSpec spec;
  /// Per dimension: whether start and goal projections overlap.
  std::vector<bool> overlapping;
  std::vector<std::string> warnings;
};

/// Builds a funnel that contains `start` at t = 0 and shrinks into `goal`.
Synthesis synthesize(const StateBox& start, const StateBox& goal, const StateBox& space,
                     const SynthesisOptions& options);

/// Modulated error, its transform and the diagnostics used by the control law.
struct TransformedError {
  Vector xi;          // T_i(m_i)
  Vector modulated;   // m_i = (x_i - eta_i) / w_i(t)
  Vector phi;         // (1 / w_i) dT_i/dm_i
  Vector alpha;       // -w_i'(t) / w_i(t)
};

/// T_i(m) = ln(d_i (c_i + m) / (c_i (d_i - m))). Throws OutsideFunnel unless
/// m_i in (-c_i, d_i) for every i.
TransformedError transform(const FunnelSpec& spec, const Vector& x, double t);

/// Modulated error m with T(m) = xi; always strictly inside (-c, d).
Vector inverse_transform(const FunnelSpec& spec, const Vector& xi);

/// Scalar transform for one dimension.
double transform_scalar(double modulated, double c, double d);
double inverse_transform_scalar(double xi, double c, double d);

}  // namespace gpfunnel
