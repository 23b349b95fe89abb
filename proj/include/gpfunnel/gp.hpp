#pragma once

#include "gpfunnel/types.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <string>
#include <vector>

namespace gpfunnel {

/// N noisy samples y = f(x) + w of an n-dimensional vector field, w ~ N(0, noise_std^2 I).
/// Rows of `inputs` and `targets` are samples.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix inputs, Matrix targets, double noise_std);

  Index size() const { return inputs_.rows(); }
  Index dim() const { return inputs_.cols(); }
  const Matrix& inputs() const { return inputs_; }
  const Matrix& targets() const { return targets_; }
  double noise_std() const { return noise_std_; }

  Vector input(Index j) const { return inputs_.row(j).transpose(); }

 private:
  Matrix inputs_;
  Matrix targets_;
  double noise_std_ = 0.0;
};

/// ARD squared-exponential kernel
///   k(x, x') = s^2 exp(-sum_j (x_j - x'_j)^2 / (2 l_j^2)).
struct SeKernel {
  double signal_std = 1.0;
  Vector lengthscales;

  double operator()(const Vector& a, const Vector& b) const;
  void validate(Index input_dim) const;
};

/// One kernel per output dimension.
struct KernelParams {
  std::vector<SeKernel> dims;

  Index size() const { return static_cast<Index>(dims.size()); }
  const SeKernel& operator[](Index i) const { return dims[static_cast<std::size_t>(i)]; }
  SeKernel& operator[](Index i) { return dims[static_cast<std::size_t>(i)]; }

  void validate(Index input_dim, Index output_dim) const;

  /// Same kernel replicated for every output.
  static KernelParams uniform(Index dim, double signal_std, double lengthscale);
};

double kernel_eval(const KernelParams& params, Index i, const Vector& a, const Vector& b);

struct FitOptions {
  /// Added to the diagonal on top of noise_std^2. Never applied implicitly.
  double jitter = 0.0;
};

/// Independent zero-mean GP posterior per output dimension. Immutable after construction.
class GPModel {
 public:
  GPModel(Dataset data, KernelParams params, StateBox box, FitOptions options = {});

  Index dim() const { return data_.dim(); }
  const Dataset& data() const { return data_; }
  const KernelParams& params() const { return params_; }
  const StateBox& box() const { return box_; }
  const FitOptions& options() const { return options_; }

  Vector mean(const Vector& x) const;
  Vector stddev(const Vector& x) const;
  double mean(Index i, const Vector& x) const;
  /// Posterior variance before clamping at zero.
  double raw_variance(Index i, const Vector& x) const;

  /// (K_i + noise^2 I)^-1 y_i
  const Vector& weights(Index i) const { return outputs_[static_cast<std::size_t>(i)].weights; }
  /// y_i^T (K_i + noise^2 I)^-1 y_i
  double quadratic_form(Index i) const;

 private:
  using ExtVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  using ExtMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

  // Queries accumulate in extended precision: the weights can be large against O(1)
  // outputs, and double accumulation leaves ~1e-8 of non-smooth noise in mu and sigma.
  struct Output {
    Eigen::LLT<Matrix> chol;
    Vector weights;
    ExtMatrix lower;  // Cholesky factor, widened
    ExtVector weights_ext;
  };

  ExtVector cross_covariance(Index i, const Vector& x) const;

  Dataset data_;
  KernelParams params_;
  StateBox box_;
  FitOptions options_;
  std::vector<Output> outputs_;
};

GPModel fit_posterior(const Dataset& data, const KernelParams& params, const StateBox& box,
                      FitOptions options = {});

Vector posterior_mean(const GPModel& model, const Vector& x);
Vector posterior_std(const GPModel& model, const Vector& x);

/// Max of the posterior std over a uniform grid of the box (corners included). This is
/// an under-approximation of the true supremum; see grid_cell_size().
Vector max_std(const GPModel& model, const StateBox& box, int grid_per_dim = 101);
Vector grid_cell_size(const StateBox& box, int grid_per_dim);

/// Log evidence of output `i` and its gradient with respect to
/// [log signal_std, log l_1, ..., log l_n].
struct Evidence {
  double value = 0.0;
  Vector gradient;
};

Evidence log_marginal_likelihood(const Dataset& data, const KernelParams& params, Index i,
                                 FitOptions options = {});

struct OptimizeOptions {
  int restarts = 8;
  std::uint64_t seed = 0;
  /// Box on log-parameters; restarts are drawn uniformly inside it.
  double min_log_param = -7.0;
  double max_log_param = 9.0;
  FitOptions fit;
};

struct HyperparamFit {
  KernelParams params;
  std::vector<double> log_evidence;       // per output, at `params`
  std::vector<double> init_log_evidence;  // per output, at the initial guess
  /// False when no restart improved on the initial guess for some output; that output
  /// keeps its initial parameters.
  bool improved = true;
  std::vector<std::string> warnings;
};

/// Quasi-Newton ascent on the log evidence in log-parameter space, per output dimension,
/// with `options.restarts` starts (the first one is `init`). `budget` caps iterations per start.
HyperparamFit optimize_hyperparams(const Dataset& data, const KernelParams& init, int budget,
                                   const OptimizeOptions& options = {});

}  // namespace gpfunnel
