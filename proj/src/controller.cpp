#include "gpfunnel/controller.hpp"

#include "gpfunnel/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace gpfunnel {

Vector right_inverse_apply(const Matrix& g, const Vector& v) {
  if (g.rows() != v.size()) throw DomainError("input map has the wrong number of rows");
  const Matrix ggt = g * g.transpose();
  Eigen::LLT<Matrix> llt(ggt);
  const double tol = static_cast<double>(ggt.rows()) * std::numeric_limits<double>::epsilon() *
                     ggt.diagonal().cwiseAbs().maxCoeff();
  bool ok = llt.info() == Eigen::Success;
  for (Index i = 0; ok && i < ggt.rows(); ++i) {
    const double p = llt.matrixLLT()(i, i);
    ok = p * p > tol;
  }
  if (!ok) throw SingularInputMap("g(x) g(x)^T is not positive definite");
  return -(g.transpose() * llt.solve(v));
}

ControlLaw::ControlLaw(std::shared_ptr<const GPModel> model, BoundSet bound, FunnelSpec spec,
                       InputMap input_map, ControlOptions options)
    : model_(std::move(model)),
      bound_(std::move(bound)),
      spec_(std::move(spec)),
      input_map_(std::move(input_map)),
      options_(options) {
  if (!model_) throw DomainError("control law needs a model");
  if (bound_.scale.size() != model_->dim() || spec_.dim() != model_->dim()) {
    throw DomainError("bound, funnel and model dimensions differ");
  }
  bound_.validate();
  spec_.validate();
  if (!input_map_) throw DomainError("control law needs an input map");
}

double ControlLaw::sign(double v) const {
  if (options_.sign_smoothing > 0.0) return std::tanh(v / options_.sign_smoothing);
  return v >= 0.0 ? 1.0 : -1.0;
}

Vector ControlLaw::robustness_term(const Vector& x) const {
  const Vector sd = model_->stddev(x);
  Vector r(sd.size());
  for (Index i = 0; i < sd.size(); ++i) {
    r[i] = sign(x[i] - spec_.attractor[i]) * bound_.scale[i] * sd[i];
  }
  return r;
}

ControlEvaluation ControlLaw::evaluate(const Vector& x, double t) const {
  ControlEvaluation ev;
  ev.error = transform(spec_, x, t);
  ev.robustness = robustness_term(x);
  ev.drive = model_->mean(x) + ev.robustness + ev.error.xi + spec_.decay_max() * (x - spec_.attractor);
  ev.input = right_inverse_apply(input_map_(x), ev.drive);
  return ev;
}

Vector ControlLaw::control(const Vector& x, double t) const { return evaluate(x, t).input; }

LyapunovValue ControlLaw::lyapunov(const Vector& x, double t) const {
  const auto e = transform(spec_, x, t);
  return {0.5 * e.xi.squaredNorm(), -e.xi.dot(e.phi.cwiseProduct(e.xi))};
}

}  // namespace gpfunnel
