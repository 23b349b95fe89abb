#include "doctest.h"
#include "oracles.hpp"

#include "gpfunnel/bounds.hpp"
#include "gpfunnel/errors.hpp"

#include <cmath>
#include <random>

using namespace gpfunnel;

namespace {

GPModel toy_model(double noise = 0.1, double signal = 1.0) {
  Matrix x(3, 1), y(3, 1);
  x << -0.5, 0.0, 0.7;
  y << std::sin(-0.5), 0.0, std::sin(0.7);
  return GPModel(Dataset(x, y, noise), KernelParams::uniform(1, signal, 0.8), StateBox::cube(1, -1, 1));
}

Dynamics sine() {
  return [](const Vector& x) { return Vector::Constant(1, std::sin(x[0])); };
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("probabilistic beta hand values") {
  const Index n = 50;
  const double e = 0.01, b = 1.3, g = 4.2;
  const long double l = std::log((n + 1.0L) / e);
  CHECK(beta_probabilistic(b, g, n, e) == doctest::Approx(static_cast<double>(std::sqrt(2.0L * b * b + 300.0L * g * l * l * l))).epsilon(1e-14));
  CHECK(beta_probabilistic(2.0, 0.0, 10, 0.5) == doctest::Approx(std::sqrt(2.0) * 2.0).epsilon(1e-15));
}

TEST_CASE("beta with a unit log term is sqrt(302)") {
  // (N + 1) / eps = e with N = 1, eps = 2 / e (< 1).
  CHECK(beta_probabilistic(1.0, 1.0, 1, 2.0 / std::exp(1.0)) == doctest::Approx(17.378147).epsilon(1e-7));
}

TEST_CASE("beta closed form on random tuples") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double b = 10 * u(rng), g = 20 * u(rng), e = 1e-6 + 0.99 * u(rng);
    const Index n = 1 + static_cast<Index>(1000 * u(rng));
    const long double l = std::log((static_cast<long double>(n) + 1.0L) / e);
    const double ref = static_cast<double>(std::sqrt(2.0L * b * b + 300.0L * g * l * l * l));
    CHECK(std::abs(beta_probabilistic(b, g, n, e) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("beta domain and monotonicity in the confidence parameter") {
  CHECK_THROWS_AS(beta_probabilistic(1, 1, 10, 0.0), DomainError);
  CHECK_THROWS_AS(beta_probabilistic(1, 1, 10, 1.0), DomainError);
  CHECK_THROWS_AS(beta_probabilistic(-1, 1, 10, 0.1), DomainError);
  double prev = INFINITY;
  for (double e = 0.01; e < 0.99; e += 0.01) {
    const double v = beta_probabilistic(1.0, 2.0, 50, e);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("greedy information gain of one pick") {
  const double signal = 1.0, noise = 0.1;
  const GPModel m = toy_model(noise, signal);
  const auto g = info_gain_greedy(m, m.box(), 1, 0, 50);
  const double one = 0.5 * std::log(1.0 + signal * signal / (noise * noise));
  CHECK(g.greedy_value == doctest::Approx(one).epsilon(1e-12));
  CHECK(g.gamma == doctest::Approx(one / (1.0 - std::exp(-1.0))).epsilon(1e-12));
  CHECK(g.selected == 1);
}

TEST_CASE("greedy information gain grows with the budget and vanishes with the signal") {
  const GPModel m = toy_model();
  double prev = 0.0;
  for (Index b : {1, 2, 5, 10, 20}) {
    const double v = info_gain_greedy(m, m.box(), b, 0, 100).gamma;
    CHECK(v >= prev);
    prev = v;
  }
  const GPModel quiet = toy_model(0.1, 1e-6);
  CHECK(info_gain_greedy(quiet, quiet.box(), 10, 0, 100).gamma < 1e-9);
  const GPModel noiseless = toy_model(0.0);
  CHECK_THROWS_AS(info_gain_greedy(noiseless, noiseless.box(), 3, 0, 100), DomainError);
}

TEST_CASE("kernel gradient supremum and RKHS bound") {
  SeKernel k{1.0, Vector::Ones(2)};
  CHECK(kernel_grad_sup(k) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  KernelParams p;
  p.dims = {k};
  CHECK(rkhs_bound(1.0, p, 0) == doctest::Approx(0.90794).epsilon(1e-5));
  CHECK(rkhs_bound(2.0, p, 0) == doctest::Approx(2.0 * rkhs_bound(1.0, p, 0)).epsilon(1e-15));
  double prev = 0.0;
  for (double ell : {0.5, 1.0, 2.0, 4.0}) {
    KernelParams q;
    q.dims = {SeKernel{1.0, Vector::Constant(2, ell)}};
    CHECK(rkhs_bound(1.0, q, 0) >= prev);
    prev = rkhs_bound(1.0, q, 0);
  }
}

TEST_CASE("Lipschitz estimate") {
  Matrix x(2, 1), y(2, 1);
  x << 0.0, 4.0;
  y << 0.0, 1.0;
  CHECK(estimate_lipschitz_sqrt(Dataset(x, y, 0.0), 0) == doctest::Approx(0.5));
  y << 3.0, 3.0;
  CHECK(estimate_lipschitz_sqrt(Dataset(x, y, 0.0), 0) == 0.0);
  Matrix x3(3, 1), y3(3, 1);
  x3 << 0.0, 4.0, 1.0;
  y3 << 0.0, 1.0, 0.9;
  CHECK(estimate_lipschitz_sqrt(Dataset(x3, y3, 0.0), 0) >= 0.5);
  Matrix same(2, 1);
  same << 1.0, 1.0;
  y << 0.0, 1.0;
  CHECK_THROWS_AS(estimate_lipschitz_sqrt(Dataset(same, y, 0.0), 0), DomainError);
}

TEST_CASE("deterministic beta") {
  Matrix x(4, 1), y = Matrix::Zero(4, 1);
  x << -1, -0.3, 0.2, 0.9;
  const GPModel zero(Dataset(x, y, 0.1), KernelParams::uniform(1, 1.0, 0.5), StateBox::cube(1, -1, 1));
  CHECK(beta_deterministic(1.5, zero, 0) == doctest::Approx(std::sqrt(1.5 * 1.5 + 4.0)).epsilon(1e-14));
  Matrix xs(3, 1), ys(3, 1);
  xs << -0.5, 0.0, 0.7;
  ys << -4.0, 3.0, 5.0;
  const GPModel m(Dataset(xs, ys, 0.01), KernelParams::uniform(1, 1.0, 0.8), StateBox::cube(1, -1, 1));
  const double qf = m.quadratic_form(0);
  CHECK(qf > 3.0);  // otherwise the radicand below would not be negative
  try {
    beta_deterministic(0.0, m, 0);
    FAIL("expected NegativeRadicand");
  } catch (const NegativeRadicand& e) {
    CHECK(e.radicand() == doctest::Approx(3.0 - qf));
    CHECK(e.min_bound() == doctest::Approx(std::sqrt(qf - 3.0)));
  }
}

TEST_CASE("Clopper-Pearson agrees with binomial bisection") {
  struct Case { std::uint64_t k, n; };
  for (double level : {0.95, 1.0 - 1e-10}) {
    for (const Case c : {Case{0, 1}, Case{1, 1}, Case{5, 10}, Case{999'999, 1'000'000}, Case{990'000, 1'000'000}}) {
      const auto got = clopper_pearson(c.k, c.n, level);
      const auto ref = oracle::clopper_pearson_bisect(c.k, c.n, level);
      CHECK(std::abs(got.lo - ref.lo) < 1e-9);
      CHECK(std::abs(got.hi - ref.hi) < 1e-9);
    }
  }
  CHECK(clopper_pearson(0, 10, 0.95).lo == 0.0);
  CHECK(clopper_pearson(10, 10, 0.95).hi == 1.0);
}

TEST_CASE("Monte-Carlo coverage extremes, monotonicity and determinism") {
  const GPModel m = toy_model();
  CoverageOptions opt;
  opt.trials = 20'000;
  opt.seed = 7;
  const auto all = monte_carlo_coverage(m, sine(), m.box(), Envelope::constant(Vector::Constant(1, 1e12)), opt);
  CHECK(all.hits == all.trials);
  CHECK(all.interval.hi == 1.0);
  const auto none = monte_carlo_coverage(m, sine(), m.box(), Envelope::constant(Vector::Zero(1)), opt);
  CHECK(none.hits == 0);
  std::uint64_t prev = 0;
  for (double s : {0.01, 0.05, 0.1, 0.5, 1.0}) {
    const auto r = monte_carlo_coverage(m, sine(), m.box(), Envelope::pointwise(Vector::Constant(1, s)), opt);
    CHECK(r.hits >= prev);
    prev = r.hits;
  }
  opt.threads = 1;
  const auto a = monte_carlo_coverage(m, sine(), m.box(), Envelope::constant(Vector::Constant(1, 0.05)), opt);
  opt.threads = 3;
  const auto b = monte_carlo_coverage(m, sine(), m.box(), Envelope::constant(Vector::Constant(1, 0.05)), opt);
  CHECK(a.hits == b.hits);
}

TEST_CASE("calibrated common scale reaches the target") {
  const GPModel m = toy_model();
  CoverageOptions opt;
  opt.trials = 20'000;
  opt.seed = 3;
  const Vector ref = Vector::Constant(1, 0.1);
  const double s = calibrate_common_scale(m, sine(), m.box(), ref, 0.9, opt);
  const auto r = monte_carlo_coverage(m, sine(), m.box(), Envelope::constant(s * ref), opt);
  CHECK(r.empirical() >= 0.9);
  const auto below = monte_carlo_coverage(m, sine(), m.box(), Envelope::constant(0.99 * s * ref), opt);
  CHECK(below.empirical() < 0.9);
}

}  // TEST_SUITE
