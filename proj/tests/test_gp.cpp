#include "doctest.h"
#include "oracles.hpp"

#include "gpfunnel/errors.hpp"
#include "gpfunnel/gp.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace gpfunnel;

namespace {

Dataset single_point(double x, double y, double noise) {
  Matrix in(1, 1), out(1, 1);
  in << x;
  out << y;
  return Dataset(in, out, noise);
}

Vector v1(double a) { return Vector::Constant(1, a); }

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("kernel matches the hand value and is symmetric") {
  SeKernel k{1.0, Vector::Ones(2)};
  const Vector a{{0.0, 0.0}}, b{{1.0, 0.0}};
  CHECK(k(a, b) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(k(a, b) == doctest::Approx(0.60653066).epsilon(1e-8));
  CHECK(k(a, b) == k(b, a));
  SeKernel s{3.0, Vector{{0.4, 2.0}}};
  CHECK(s(a, a) == doctest::Approx(9.0));
}

TEST_CASE("single observation has the closed-form posterior") {
  const double signal = 1.5, noise = 0.3, y = 2.0;
  const GPModel m(single_point(0.0, y, noise), KernelParams::uniform(1, signal, 1.0), StateBox::cube(1, -1, 1));
  const double s2 = signal * signal;
  CHECK(m.mean(0, v1(0.0)) == doctest::Approx(s2 * y / (s2 + noise * noise)).epsilon(1e-13));
  CHECK(m.raw_variance(0, v1(0.0)) == doctest::Approx(s2 * noise * noise / (s2 + noise * noise)).epsilon(1e-12));
}

TEST_CASE("posterior agrees with the dense-solve oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> q(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = oracle::random_problem(rng, trial < 50 ? 10 : 50, 3);
    const GPModel m(p.data, p.params, p.box);
    for (int k = 0; k < 5; ++k) {
      Vector x(p.data.dim());
      for (Index j = 0; j < x.size(); ++j) x[j] = q(rng);
      for (Index i = 0; i < p.data.dim(); ++i) {
        const auto ref = oracle::dense_posterior(p.data, p.params, i, x);
        const double tol = trial < 50 ? 1e-10 : 1e-8;
        CHECK(std::abs(m.mean(i, x) - ref.mean) <= tol * std::max(1.0, std::abs(ref.mean)));
        CHECK(std::abs(m.raw_variance(i, x) - ref.variance) <= tol * std::max(1.0, p.params[i].signal_std * p.params[i].signal_std));
      }
    }
  }
}

TEST_CASE("far from the data the prior is recovered") {
  const GPModel m(single_point(0.0, 1.0, 0.1), KernelParams::uniform(1, 2.0, 0.5), StateBox::cube(1, -100, 100));
  CHECK(std::abs(m.mean(0, v1(50.0))) < 1e-12);
  CHECK(m.stddev(v1(50.0))[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("tiny noise interpolates the data") {
  Matrix x(3, 1), y(3, 1);
  x << -1, 0, 1;
  y << 0.5, -0.2, 0.9;
  const GPModel m(Dataset(x, y, 1e-6), KernelParams::uniform(1, 1.0, 1.0), StateBox::cube(1, -2, 2));
  for (Index j = 0; j < 3; ++j) CHECK(m.mean(0, v1(x(j, 0))) == doctest::Approx(y(j, 0)).epsilon(1e-6));
}

TEST_CASE("variance before clamping is never materially negative") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = oracle::random_problem(rng, 30, 2);
    const GPModel m(p.data, p.params, p.box);
    for (Index r = 0; r < p.data.size(); ++r) {
      for (Index i = 0; i < p.data.dim(); ++i) CHECK(m.raw_variance(i, p.data.input(r)) >= -1e-8);
    }
  }
}

TEST_CASE("duplicate inputs without noise fail to factorize, jitter fixes it") {
  Matrix x(2, 1), y(2, 1);
  x << 0.3, 0.3;
  y << 1.0, 1.0;
  CHECK_THROWS_AS(GPModel(Dataset(x, y, 0.0), KernelParams::uniform(1, 1.0, 1.0), StateBox::cube(1, -1, 1)),
                  FactorizationFailure);
  FitOptions opt;
  opt.jitter = 1e-8;
  CHECK_NOTHROW(GPModel(Dataset(x, y, 0.0), KernelParams::uniform(1, 1.0, 1.0), StateBox::cube(1, -1, 1), opt));
}

TEST_CASE("invalid hyperparameters are rejected") {
  CHECK_THROWS_AS(GPModel(single_point(0, 1, 0.1), KernelParams::uniform(1, -1.0, 1.0), StateBox::cube(1, -1, 1)),
                  DomainError);
  CHECK_THROWS_AS(GPModel(single_point(0, 1, 0.1), KernelParams::uniform(1, 1.0, 0.0), StateBox::cube(1, -1, 1)),
                  DomainError);
}

TEST_CASE("queries are deterministic") {
  std::mt19937_64 rng(3);
  const auto p = oracle::random_problem(rng, 20, 2);
  const GPModel a(p.data, p.params, p.box), b(p.data, p.params, p.box);
  const Vector x = p.box.center();
  CHECK((a.mean(x).array() == b.mean(x).array()).all());
  CHECK((a.stddev(x).array() == b.stddev(x).array()).all());
}

TEST_CASE("grid maximum of the std grows with a nested finer grid") {
  std::mt19937_64 rng(9);
  const auto p = oracle::random_problem(rng, 15, 2);
  const GPModel m(p.data, p.params, p.box);
  const Vector coarse = max_std(m, p.box, 11), fine = max_std(m, p.box, 21);
  for (Index i = 0; i < coarse.size(); ++i) CHECK(coarse[i] <= fine[i]);
  CHECK(grid_cell_size(p.box, 11)[0] == doctest::Approx(0.4));
}

TEST_CASE("log evidence of one zero observation") {
  const double signal = 0.7, noise = 0.2;
  const auto e = log_marginal_likelihood(single_point(0.0, 0.0, noise), KernelParams::uniform(1, signal, 1.0), 0);
  const double s = signal * signal + noise * noise;
  CHECK(e.value == doctest::Approx(-0.5 * std::log(s) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("log evidence agrees with the dense oracle and its gradient with central differences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = oracle::random_problem(rng, 10, 2);
    for (Index i = 0; i < p.data.dim(); ++i) {
      const auto e = log_marginal_likelihood(p.data, p.params, i);
      CHECK(e.value == doctest::Approx(oracle::dense_log_evidence(p.data, p.params, i)).epsilon(1e-9));
      const Index np = 1 + p.data.dim();
      for (Index k = 0; k < np; ++k) {
        const double h = 1e-5;
        auto shifted = [&](double step) {
          KernelParams q = p.params;
          if (k == 0) q.dims[i].signal_std *= std::exp(step);
          else q.dims[i].lengthscales[k - 1] *= std::exp(step);
          return oracle::dense_log_evidence(p.data, q, i);
        };
        const double fd = (shifted(h) - shifted(-h)) / (2 * h);
        CHECK(std::abs(e.gradient[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("optimizer never loses evidence and recovers a generating lengthscale") {
  // 1-D draw from a GP prior with known hyperparameters.
  const double signal = 2.0, ell = 1.0, noise = 0.1;
  const Index n = 60;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix x(n, 1);
  for (Index r = 0; r < n; ++r) x(r, 0) = u(rng);
  Matrix k(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) k(r, c) = oracle::se_kernel(signal, v1(ell), x.row(r).transpose(), x.row(c).transpose());
  k.diagonal().array() += 1e-10;
  const Matrix lower = k.llt().matrixL();
  Vector w(n);
  for (Index r = 0; r < n; ++r) w[r] = z(rng);
  Matrix y = lower * w;
  for (Index r = 0; r < n; ++r) y(r, 0) += noise * z(rng);
  const Dataset data(x, y, noise);

  OptimizeOptions opt;
  opt.seed = 1;
  const auto init = KernelParams::uniform(1, 0.5, 5.0);
  const auto fit = optimize_hyperparams(data, init, 200, opt);
  CHECK(fit.log_evidence[0] >= fit.init_log_evidence[0]);
  CHECK(fit.params[0].lengthscales[0] > ell / 2);
  CHECK(fit.params[0].lengthscales[0] < ell * 2);
}

}  // TEST_SUITE
