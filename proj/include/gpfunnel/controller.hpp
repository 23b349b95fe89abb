#pragma once

#include "gpfunnel/bounds.hpp"
#include "gpfunnel/funnel.hpp"
#include "gpfunnel/gp.hpp"

#include <memory>

namespace gpfunnel {

struct ControlOptions {
  /// When > 0, sign(x_i - eta_i) is replaced by tanh((x_i - eta_i) / sign_smoothing).
  /// Off by default: the reachability argument relies on the exact sign.
  double sign_smoothing = 0.0;
};

struct LyapunovValue {
  double value = 0.0;      // V = xi^T xi / 2
  double decrement = 0.0;  // -xi^T Phi_t xi, upper bound on dV/dt when the envelope holds
};

/// Everything computed in one evaluation of the law; the simulator records it.
struct ControlEvaluation {
  Vector input;       // u
  Vector drive;       // v, with u = -g^T (g g^T)^-1 v
  Vector robustness;  // sign(x_i - eta_i) beta_i sigma_i(x)
  TransformedError error;
};

/// u(x, t) = -g(x)^T (g(x) g(x)^T)^-1 (mu(x) + sign(x - eta) beta sigma(x) + xi(x, t)
///           + decay_max (x - eta)), with sign(0) = +1 and the sign term taken per component.
class ControlLaw {
 public:
  ControlLaw(std::shared_ptr<const GPModel> model, BoundSet bound, FunnelSpec spec, InputMap input_map,
             ControlOptions options = {});

  Vector control(const Vector& x, double t) const;
  Vector robustness_term(const Vector& x) const;
  LyapunovValue lyapunov(const Vector& x, double t) const;
  ControlEvaluation evaluate(const Vector& x, double t) const;

  const GPModel& model() const { return *model_; }
  const BoundSet& bound() const { return bound_; }
  const FunnelSpec& spec() const { return spec_; }
  const InputMap& input_map() const { return input_map_; }

 private:
  double sign(double v) const;

  std::shared_ptr<const GPModel> model_;
  BoundSet bound_;
  FunnelSpec spec_;
  InputMap input_map_;
  ControlOptions options_;
};

/// -g^T (g g^T)^-1 v; throws SingularInputMap when g g^T is not positive definite.
Vector right_inverse_apply(const Matrix& g, const Vector& v);

}  // namespace gpfunnel
