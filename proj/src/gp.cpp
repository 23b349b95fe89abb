#include "gpfunnel/gp.hpp"

#include "gpfunnel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace gpfunnel {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw DomainError(std::string(what) + " contains non-finite values");
  }
}

Matrix gram(const SeKernel& kernel, const Matrix& inputs) {
  const Index n = inputs.rows();
  Matrix k(n, n);
  for (Index a = 0; a < n; ++a) {
    const Vector xa = inputs.row(a).transpose();
    k(a, a) = kernel.signal_std * kernel.signal_std;
    for (Index b = a + 1; b < n; ++b) {
      k(a, b) = kernel(xa, inputs.row(b).transpose());
      k(b, a) = k(a, b);
    }
  }
  return k;
}

// Cholesky of A, rejecting pivots that are not positive relative to round-off of the diagonal.
Eigen::LLT<Matrix> factorize(const Matrix& a, const std::string& context) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw FactorizationFailure(context + ": matrix is not positive definite");
  }
  const double tol = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() *
                     a.diagonal().cwiseAbs().maxCoeff();
  const Matrix& l = llt.matrixLLT();
  for (Index i = 0; i < a.rows(); ++i) {
    if (!(l(i, i) * l(i, i) > tol)) {
      throw FactorizationFailure(context + ": non-positive pivot at row " + std::to_string(i + 1) +
                                 " (duplicate inputs with zero noise?)");
    }
  }
  return llt;
}

double noise_diagonal(const Dataset& data, const FitOptions& options) {
  return data.noise_std() * data.noise_std() + options.jitter;
}

}  // namespace

Dataset::Dataset(Matrix inputs, Matrix targets, double noise_std)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), noise_std_(noise_std) {
  if (inputs_.rows() < 1 || inputs_.cols() < 1) {
    throw DomainError("dataset needs at least one sample of dimension >= 1");
  }
  if (targets_.rows() != inputs_.rows() || targets_.cols() != inputs_.cols()) {
    throw DomainError("dataset inputs and targets must have equal shape");
  }
  if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
    throw DomainError("noise_std must be finite and >= 0");
  }
  require_finite(inputs_, "dataset inputs");
  require_finite(targets_, "dataset targets");
}

double SeKernel::operator()(const Vector& a, const Vector& b) const {
  double s = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    const double r = (a[j] - b[j]) / lengthscales[j];
    s += r * r;
  }
  return signal_std * signal_std * std::exp(-0.5 * s);
}

void SeKernel::validate(Index input_dim) const {
  if (!(signal_std > 0.0) || !std::isfinite(signal_std)) {
    throw DomainError("kernel signal_std must be finite and > 0");
  }
  if (lengthscales.size() != input_dim) {
    throw DomainError("kernel needs one lengthscale per input coordinate");
  }
  for (Index j = 0; j < lengthscales.size(); ++j) {
    if (!(lengthscales[j] > 0.0) || !std::isfinite(lengthscales[j])) {
      throw DomainError("kernel lengthscales must be finite and > 0");
    }
  }
}

void KernelParams::validate(Index input_dim, Index output_dim) const {
  if (size() != output_dim) {
    throw DomainError("need one kernel per output dimension");
  }
  for (const auto& k : dims) k.validate(input_dim);
}

KernelParams KernelParams::uniform(Index dim, double signal_std, double lengthscale) {
  KernelParams p;
  p.dims.assign(static_cast<std::size_t>(dim), SeKernel{signal_std, Vector::Constant(dim, lengthscale)});
  return p;
}

double kernel_eval(const KernelParams& params, Index i, const Vector& a, const Vector& b) {
  return params[i](a, b);
}

GPModel::GPModel(Dataset data, KernelParams params, StateBox box, FitOptions options)
    : data_(std::move(data)), params_(std::move(params)), box_(std::move(box)), options_(options) {
  params_.validate(data_.dim(), data_.dim());
  if (box_.dim() != data_.dim()) {
    throw DomainError("state box dimension does not match the dataset");
  }
  if (!(options_.jitter >= 0.0)) {
    throw DomainError("jitter must be >= 0");
  }
  const double diag = noise_diagonal(data_, options_);
  outputs_.reserve(static_cast<std::size_t>(dim()));
  for (Index i = 0; i < dim(); ++i) {
    Matrix a = gram(params_[i], data_.inputs());
    a.diagonal().array() += diag;
    Output out{factorize(a, "GP output " + std::to_string(i + 1)), {}, {}, {}};
    out.weights = out.chol.solve(data_.targets().col(i));
    out.lower = Matrix(out.chol.matrixL()).cast<long double>();
    out.weights_ext = out.weights.cast<long double>();
    outputs_.push_back(std::move(out));
  }
}

GPModel::ExtVector GPModel::cross_covariance(Index i, const Vector& x) const {
  const auto& kernel = params_[i];
  const Matrix& inputs = data_.inputs();
  const long double s2 = static_cast<long double>(kernel.signal_std) * kernel.signal_std;
  ExtVector k(data_.size());
  for (Index j = 0; j < data_.size(); ++j) {
    long double r2 = 0.0L;
    for (Index d = 0; d < inputs.cols(); ++d) {
      const long double r = (static_cast<long double>(inputs(j, d)) - x[d]) / kernel.lengthscales[d];
      r2 += r * r;
    }
    k[j] = s2 * std::exp(-0.5L * r2);
  }
  return k;
}

double GPModel::mean(Index i, const Vector& x) const {
  return static_cast<double>(cross_covariance(i, x).dot(outputs_[static_cast<std::size_t>(i)].weights_ext));
}

double GPModel::raw_variance(Index i, const Vector& x) const {
  const auto& out = outputs_[static_cast<std::size_t>(i)];
  const ExtVector v = out.lower.triangularView<Eigen::Lower>().solve(cross_covariance(i, x));
  const long double s = params_[i].signal_std;
  return static_cast<double>(s * s - v.squaredNorm());
}

Vector GPModel::mean(const Vector& x) const {
  Vector m(dim());
  for (Index i = 0; i < dim(); ++i) m[i] = mean(i, x);
  return m;
}

Vector GPModel::stddev(const Vector& x) const {
  Vector s(dim());
  for (Index i = 0; i < dim(); ++i) s[i] = std::sqrt(std::max(0.0, raw_variance(i, x)));
  return s;
}

double GPModel::quadratic_form(Index i) const {
  return data_.targets().col(i).dot(weights(i));
}

GPModel fit_posterior(const Dataset& data, const KernelParams& params, const StateBox& box,
                      FitOptions options) {
  return GPModel(data, params, box, options);
}

Vector posterior_mean(const GPModel& model, const Vector& x) { return model.mean(x); }

Vector posterior_std(const GPModel& model, const Vector& x) { return model.stddev(x); }

Vector max_std(const GPModel& model, const StateBox& box, int grid_per_dim) {
  Vector best = Vector::Zero(model.dim());
  for (const auto& p : grid_points(box, grid_per_dim)) {
    best = best.cwiseMax(model.stddev(p));
  }
  return best;
}

Vector grid_cell_size(const StateBox& box, int grid_per_dim) {
  return box.width() / static_cast<double>(grid_per_dim - 1);
}

Evidence log_marginal_likelihood(const Dataset& data, const KernelParams& params, Index i,
                                 FitOptions options) {
  const SeKernel& kernel = params[i];
  kernel.validate(data.dim());
  const Index n = data.size();
  const Matrix kf = gram(kernel, data.inputs());
  Matrix a = kf;
  a.diagonal().array() += noise_diagonal(data, options);
  const auto llt = factorize(a, "evidence for output " + std::to_string(i + 1));

  const Vector y = data.targets().col(i);
  const Vector alpha = llt.solve(y);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

  Evidence ev;
  ev.value = -0.5 * y.dot(alpha) - 0.5 * log_det -
             0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // dL/dtheta = 1/2 tr((alpha alpha^T - A^-1) dA/dtheta)
  const Matrix w = alpha * alpha.transpose() - llt.solve(Matrix::Identity(n, n));
  const Index dim = data.dim();
  ev.gradient = Vector::Zero(dim + 1);
  ev.gradient[0] = (w.array() * kf.array()).sum();  // dK/dlog s = 2 K_f
  for (Index j = 0; j < dim; ++j) {
    const double l = kernel.lengthscales[j];
    double g = 0.0;
    for (Index a_ = 0; a_ < n; ++a_) {
      for (Index b = 0; b < n; ++b) {
        const double d = (data.inputs()(a_, j) - data.inputs()(b, j)) / l;
        g += w(a_, b) * kf(a_, b) * d * d;
      }
    }
    ev.gradient[j + 1] = 0.5 * g;
  }
  return ev;
}

namespace {

Vector to_log(const SeKernel& k) {
  Vector theta(k.lengthscales.size() + 1);
  theta[0] = std::log(k.signal_std);
  theta.tail(k.lengthscales.size()) = k.lengthscales.array().log();
  return theta;
}

SeKernel from_log(const Vector& theta) {
  return {std::exp(theta[0]), theta.tail(theta.size() - 1).array().exp()};
}

struct Objective {
  const Dataset& data;
  KernelParams scratch;
  Index out;
  FitOptions fit;

  // Negative evidence and gradient; +inf when the factorization fails.
  double operator()(const Vector& theta, Vector& grad) {
    scratch[out] = from_log(theta);
    try {
      const Evidence ev = log_marginal_likelihood(data, scratch, out, fit);
      grad = -ev.gradient;
      return std::isfinite(ev.value) ? -ev.value : std::numeric_limits<double>::infinity();
    } catch (const FactorizationFailure&) {
      grad = Vector::Zero(theta.size());
      return std::numeric_limits<double>::infinity();
    }
  }
};

// Dense BFGS with Armijo backtracking, iterates clamped to [lo, hi]^d.
Vector bfgs_minimize(Objective& obj, Vector x, int max_iter, double lo, double hi, double& fx) {
  const Index d = x.size();
  x = x.cwiseMax(lo).cwiseMin(hi);
  Vector g(d);
  fx = obj(x, g);
  if (!std::isfinite(fx)) return x;
  Matrix h = Matrix::Identity(d, d);
  for (int it = 0; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-8) break;
    Vector p = -h * g;
    if (g.dot(p) >= 0.0) {
      h.setIdentity();
      p = -g;
    }
    // Keep the first trial step moderate in log space.
    const double pmax = p.lpNorm<Eigen::Infinity>();
    double step = pmax > 2.0 ? 2.0 / pmax : 1.0;
    bool accepted = false;
    Vector xn(d), gn(d);
    double fn = fx;
    for (int ls = 0; ls < 50; ++ls, step *= 0.5) {
      xn = (x + step * p).cwiseMax(lo).cwiseMin(hi);
      fn = obj(xn, gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted || (xn - x).lpNorm<Eigen::Infinity>() == 0.0) break;
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    const double df = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix id = Matrix::Identity(d, d);
      h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (df < 1e-12 * (1.0 + std::abs(fx))) break;
  }
  return x;
}

}  // namespace

HyperparamFit optimize_hyperparams(const Dataset& data, const KernelParams& init, int budget,
                                   const OptimizeOptions& options) {
  init.validate(data.dim(), data.dim());
  if (budget < 1) throw DomainError("optimizer budget must be >= 1");
  if (options.restarts < 1) throw DomainError("need at least one optimizer start");

  HyperparamFit result;
  result.params = init;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> jitter(0.0, 1.5);

  for (Index i = 0; i < data.dim(); ++i) {
    Objective obj{data, init, i, options.fit};
    const Vector theta0 = to_log(init[i]);
    Vector g0;
    const double f_init = obj(theta0, g0);
    result.init_log_evidence.push_back(-f_init);

    double best_f = f_init;
    Vector best = theta0;
    for (int r = 0; r < options.restarts; ++r) {
      Vector start = theta0;
      if (r > 0) {
        for (Index k = 0; k < start.size(); ++k) start[k] += jitter(rng);
      }
      double f = 0.0;
      const Vector theta =
          bfgs_minimize(obj, start, budget, options.min_log_param, options.max_log_param, f);
      if (f < best_f) {
        best_f = f;
        best = theta;
      }
    }
    if (best_f < f_init) {
      result.params[i] = from_log(best);
    } else {
      result.improved = false;
      result.warnings.push_back("no improving step for output " + std::to_string(i + 1) +
                                "; keeping initial hyperparameters");
    }
    result.log_evidence.push_back(-std::min(best_f, f_init));
  }
  return result;
}

}  // namespace gpfunnel
