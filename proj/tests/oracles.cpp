#include "oracles.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>

namespace oracle {

double se_kernel(double signal_std, const Vector& lengthscales, const Vector& a, const Vector& b) {
  double s = 0.0;
  for (Index j = 0; j < a.size(); ++j) {
    const double r = (a[j] - b[j]) / lengthscales[j];
    s += r * r;
  }
  return signal_std * signal_std * std::exp(-0.5 * s);
}

namespace {

Matrix gram(const gpfunnel::Dataset& data, const gpfunnel::SeKernel& k) {
  const Index n = data.size();
  Matrix a(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      a(r, c) = se_kernel(k.signal_std, k.lengthscales, data.input(r), data.input(c));
    }
    a(r, r) += data.noise_std() * data.noise_std();
  }
  return a;
}

long double log_pmf(std::uint64_t j, std::uint64_t n, long double p) {
  const long double jj = static_cast<long double>(j);
  const long double nn = static_cast<long double>(n);
  long double v = std::lgamma(nn + 1) - std::lgamma(jj + 1) - std::lgamma(nn - jj + 1);
  if (j > 0) v += jj * std::log(p);
  if (j < n) v += (nn - jj) * std::log1p(-p);
  return v;
}

// Sum of pmf over [from, to], stopping once terms stop contributing.
long double pmf_sum(std::uint64_t from, std::uint64_t to, std::uint64_t n, long double p, bool ascending) {
  long double sum = 0.0L;
  const std::uint64_t count = to - from + 1;
  for (std::uint64_t s = 0; s < count; ++s) {
    const std::uint64_t j = ascending ? from + s : to - s;
    const long double term = std::exp(log_pmf(j, n, p));
    sum += term;
    if (s > 50 && term < sum * 1e-22L) {
      // Past the mode in this direction the terms only decrease.
      const long double mode = p * static_cast<long double>(n);
      if ((ascending && static_cast<long double>(j) > mode) || (!ascending && static_cast<long double>(j) < mode)) break;
    }
  }
  return sum;
}

}  // namespace

Posterior dense_posterior(const gpfunnel::Dataset& data, const gpfunnel::KernelParams& params, Index i,
                          const Vector& x) {
  const auto& k = params[i];
  const Matrix a = gram(data, k);
  Vector kx(data.size());
  for (Index r = 0; r < data.size(); ++r) kx[r] = se_kernel(k.signal_std, k.lengthscales, data.input(r), x);
  Eigen::FullPivLU<Matrix> lu(a);
  const Vector y = data.targets().col(i);
  Posterior p;
  p.mean = kx.dot(lu.solve(y));
  p.variance = se_kernel(k.signal_std, k.lengthscales, x, x) - kx.dot(lu.solve(kx));
  return p;
}

double dense_log_evidence(const gpfunnel::Dataset& data, const gpfunnel::KernelParams& params, Index i) {
  const Matrix a = gram(data, params[i]);
  Eigen::FullPivLU<Matrix> lu(a);
  const Vector y = data.targets().col(i);
  double logdet = 0.0;
  const Matrix u = lu.matrixLU().triangularView<Eigen::Upper>();
  for (Index r = 0; r < a.rows(); ++r) logdet += std::log(std::abs(u(r, r)));
  const double n = static_cast<double>(data.size());
  return -0.5 * y.dot(lu.solve(y)) - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

long double binomial_upper_tail(std::uint64_t k, std::uint64_t n, long double p) {
  if (k == 0) return 1.0L;
  if (p <= 0.0L) return 0.0L;
  if (p >= 1.0L) return 1.0L;
  const long double mode = p * static_cast<long double>(n);
  if (static_cast<long double>(k) >= mode) return pmf_sum(k, n, n, p, true);
  return 1.0L - pmf_sum(0, k - 1, n, p, false);
}

long double binomial_lower_tail(std::uint64_t k, std::uint64_t n, long double p) {
  if (k >= n) return 1.0L;
  return 1.0L - binomial_upper_tail(k + 1, n, p);
}

Bracket clopper_pearson_bisect(std::uint64_t hits, std::uint64_t trials, double confidence_level) {
  const long double half = (1.0L - confidence_level) / 2.0L;
  Bracket b;
  if (hits > 0) {
    // P(X >= hits; p) increases in p; lower limit solves it equal to alpha / 2.
    long double lo = 0.0L, hi = 1.0L;
    for (int it = 0; it < 200; ++it) {
      const long double mid = 0.5L * (lo + hi);
      (binomial_upper_tail(hits, trials, mid) < half ? lo : hi) = mid;
    }
    b.lo = static_cast<double>(0.5L * (lo + hi));
  }
  if (hits < trials) {
    // P(X <= hits; p) decreases in p; upper limit solves it equal to alpha / 2.
    long double lo = 0.0L, hi = 1.0L;
    for (int it = 0; it < 200; ++it) {
      const long double mid = 0.5L * (lo + hi);
      (binomial_lower_tail(hits, trials, mid) > half ? lo : hi) = mid;
    }
    b.hi = static_cast<double>(0.5L * (lo + hi));
  }
  return b;
}

RandomProblem random_problem(std::mt19937_64& rng, Index max_samples, Index max_dim) {
  std::uniform_int_distribution<Index> pick_n(1, max_dim);
  std::uniform_int_distribution<Index> pick_samples(1, max_samples);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = pick_n(rng);
  const Index samples = pick_samples(rng);
  Matrix x(samples, n), y(samples, n);
  for (Index r = 0; r < samples; ++r) {
    for (Index c = 0; c < n; ++c) {
      x(r, c) = -2.0 + 4.0 * unit(rng);
      y(r, c) = -3.0 + 6.0 * unit(rng);
    }
  }
  const double noise = std::pow(10.0, -2.0 + 1.5 * unit(rng));
  gpfunnel::KernelParams params;
  for (Index i = 0; i < n; ++i) {
    gpfunnel::SeKernel k;
    k.signal_std = std::pow(10.0, -0.5 + 1.5 * unit(rng));
    k.lengthscales.resize(n);
    for (Index j = 0; j < n; ++j) k.lengthscales[j] = std::pow(10.0, -0.5 + 1.0 * unit(rng));
    params.dims.push_back(k);
  }
  return {gpfunnel::Dataset(x, y, noise), params, gpfunnel::StateBox::cube(n, -2.0, 2.0)};
}

}  // namespace oracle
