#include "doctest.h"

#include "gpfunnel/controller.hpp"
#include "gpfunnel/errors.hpp"

#include <cmath>
#include <random>

using namespace gpfunnel;

namespace {

FunnelSpec spec1(double w0, double winf, double eta = 0.0) {
  FunnelSpec s;
  s.attractor = Vector::Constant(1, eta);
  s.width0 = Vector::Constant(1, w0);
  s.width_inf = Vector::Constant(1, winf);
  s.decay = Vector::Ones(1);
  s.lower_ratio = Vector::Ones(1);
  s.upper_ratio = Vector::Ones(1);
  return s;
}

BoundSet scale1(double beta) {
  BoundSet b;
  b.scale = Vector::Constant(1, beta);
  return b;
}

// One observation y at x0 with unit signal and unit noise: mu(x0) = y / 2, sigma(x0)^2 = 1 / 2.
std::shared_ptr<const GPModel> point_model(double x0, double y) {
  Matrix x(1, 1), t(1, 1);
  x << x0;
  t << y;
  return std::make_shared<const GPModel>(Dataset(x, t, 1.0), KernelParams::uniform(1, 1.0, 1.0),
                                         StateBox::cube(1, -5, 5));
}

std::shared_ptr<const GPModel> zero_model(Index n) {
  Matrix x = Matrix::Zero(1, n), y = Matrix::Zero(1, n);
  return std::make_shared<const GPModel>(Dataset(x, y, 0.1), KernelParams::uniform(n, 1.0, 1.0),
                                         StateBox::cube(n, -5, 5));
}

InputMap constant_map(Matrix g) {
  return [g](const Vector&) { return g; };
}

}  // namespace

TEST_SUITE("controller") {

TEST_CASE("scalar hand example") {
  // mu = 1, beta sigma = 0.5, xi = ln 3, decay (x - eta) = 0.2, g = 2.
  const double x = 0.2;
  const double beta = 0.5 / std::sqrt(0.5);
  const ControlLaw law(point_model(x, 2.0), scale1(beta), spec1(0.3, 0.1), constant_map(Matrix::Constant(1, 1, 2.0)));
  const auto ev = law.evaluate(Vector::Constant(1, x), 0.0);
  CHECK(ev.error.xi[0] == doctest::Approx(std::log(3.0)).epsilon(1e-13));
  CHECK(ev.input[0] == doctest::Approx(-1.3993061).epsilon(1e-7));
  CHECK(ev.input[0] == doctest::Approx(-0.5 * (1.0 + 0.5 + std::log(3.0) + 0.2)).epsilon(1e-12));
}

TEST_CASE("identity input map reduces the law to the negated drive") {
  const auto model = point_model(0.4, 1.0);
  const ControlLaw law(model, scale1(0.7), spec1(1.0, 0.2), constant_map(Matrix::Identity(1, 1)));
  const Vector x = Vector::Constant(1, 0.3);
  const auto ev = law.evaluate(x, 0.5);
  CHECK(ev.input[0] == doctest::Approx(-ev.drive[0]).epsilon(1e-15));
  // At the attractor: xi = 0, sign(0) = +1.
  const Vector eta = Vector::Zero(1);
  const double expect = -(model->mean(0, eta) + 0.7 * model->stddev(eta)[0]);
  CHECK(law.control(eta, 0.0)[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("zero model with zero scale leaves only the funnel terms") {
  const ControlLaw law(zero_model(1), scale1(0.0), spec1(1.0, 0.1), constant_map(Matrix::Identity(1, 1)));
  const Vector x = Vector::Constant(1, -0.4);
  const auto ev = law.evaluate(x, 0.3);
  CHECK(ev.input[0] == doctest::Approx(-(ev.error.xi[0] + 1.0 * x[0])).epsilon(1e-14));
  CHECK(law.robustness_term(x)[0] == 0.0);
}

TEST_CASE("robustness term: sign, magnitude and the jump across the attractor") {
  const auto model = point_model(0.0, 0.0);
  const ControlLaw law(model, scale1(2.0), spec1(1.0, 0.1), constant_map(Matrix::Identity(1, 1)));
  const double s = model->stddev(Vector::Zero(1))[0];
  CHECK(law.robustness_term(Vector::Zero(1))[0] == doctest::Approx(2.0 * s));
  CHECK(law.robustness_term(Vector::Constant(1, -1e-3))[0] < 0.0);
  const double up = law.control(Vector::Constant(1, 1e-12), 0.0)[0];
  const double down = law.control(Vector::Constant(1, -1e-12), 0.0)[0];
  CHECK(std::abs(up - down) == doctest::Approx(2.0 * 2.0 * s).epsilon(1e-6));
  const auto ev = law.evaluate(Vector::Constant(1, 0.2), 0.0);
  CHECK(std::abs(ev.drive[0] - model->mean(0, Vector::Constant(1, 0.2)) - ev.error.xi[0] - 0.2) ==
        doctest::Approx(2.0 * model->stddev(Vector::Constant(1, 0.2))[0]).epsilon(1e-12));
}

TEST_CASE("right inverse solves g u = -v") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (int k = 0; k < 50; ++k) {
    const Index n = 1 + k % 3, m = n + k % 2;
    Matrix g(n, m);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < m; ++c) g(r, c) = z(rng);
    Vector v(n);
    for (Index r = 0; r < n; ++r) v[r] = z(rng);
    const Vector u = right_inverse_apply(g, v);
    CHECK((g * u + v).norm() <= 1e-10 * std::max(1.0, v.norm()));
  }
  Matrix rank1(2, 2);
  rank1 << 1, 2, 2, 4;
  CHECK_THROWS_AS(right_inverse_apply(rank1, Vector::Ones(2)), SingularInputMap);
}

TEST_CASE("Lyapunov value") {
  const ControlLaw law(zero_model(1), scale1(0.0), spec1(1.0, 0.1), constant_map(Matrix::Identity(1, 1)));
  CHECK(law.lyapunov(Vector::Zero(1), 0.0).value == 0.0);
  const auto l = law.lyapunov(Vector::Constant(1, 0.5), 0.0);
  CHECK(l.value > 0.0);
  CHECK(l.decrement < 0.0);
}

TEST_CASE("mismatched dimensions are rejected") {
  CHECK_THROWS_AS(ControlLaw(zero_model(2), scale1(1.0), spec1(1.0, 0.1), constant_map(Matrix::Identity(2, 2))),
                  DomainError);
}

}  // TEST_SUITE
