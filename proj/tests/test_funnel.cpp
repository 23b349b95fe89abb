#include "doctest.h"

#include "gpfunnel/errors.hpp"
#include "gpfunnel/funnel.hpp"

#include <cmath>
#include <random>

using namespace gpfunnel;

namespace {

SynthesisOptions opts(Index n) {
  SynthesisOptions o;
  o.decay = Vector::Ones(n);
  return o;
}

FunnelSpec scalar_spec(double w0, double winf, double decay, double c, double d, double eta = 0.0) {
  FunnelSpec s;
  s.attractor = Vector::Constant(1, eta);
  s.width0 = Vector::Constant(1, w0);
  s.width_inf = Vector::Constant(1, winf);
  s.decay = Vector::Constant(1, decay);
  s.lower_ratio = Vector::Constant(1, c);
  s.upper_ratio = Vector::Constant(1, d);
  return s;
}

// Random start and goal boxes inside [-5, 5]^n with a goal interior.
std::pair<StateBox, StateBox> random_boxes(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Vector sl(n), su(n), gl(n), gu(n);
  for (Index i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    sl[i] = std::min(a, b);
    su[i] = std::max(a, b);
    do {
      a = u(rng);
      b = u(rng);
    } while (std::abs(a - b) < 0.05);
    gl[i] = std::min(a, b);
    gu[i] = std::max(a, b);
  }
  return {StateBox(sl, su), StateBox(gl, gu)};
}

}  // namespace

TEST_SUITE("funnel") {

TEST_CASE("case-study funnel") {
  const auto s = synthesize(StateBox::cube(2, -3, -2), StateBox::cube(2, 1, 3), StateBox::cube(2, -5, 5), opts(2));
  for (Index i = 0; i < 2; ++i) {
    CHECK(s.spec.attractor[i] == doctest::Approx(2.0));
    CHECK(s.spec.width0[i] == doctest::Approx(5.0));
    CHECK(s.spec.lower_ratio[i] == doctest::Approx(1.0));
    CHECK(s.spec.upper_ratio[i] == doctest::Approx(0.2));
    CHECK_FALSE(s.overlapping[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("coincident start and goal") {
  const auto s = synthesize(StateBox::cube(2, 0, 1), StateBox::cube(2, 0, 1), StateBox::cube(2, -1, 2), opts(2));
  for (Index i = 0; i < 2; ++i) {
    CHECK(s.spec.attractor[i] == doctest::Approx(0.5));
    CHECK(s.spec.width0[i] == doctest::Approx(0.5));
    CHECK(s.spec.lower_ratio[i] == doctest::Approx(1.0));
    CHECK(s.spec.upper_ratio[i] == doctest::Approx(1.0));
    CHECK(s.overlapping[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("goal without interior is infeasible") {
  CHECK_THROWS_AS(synthesize(StateBox::cube(1, -3, -2), StateBox::cube(1, 1, 1), StateBox::cube(1, -5, 5), opts(1)),
                  InfeasibleGoal);
  SynthesisOptions o = opts(1);
  o.attractor = Vector::Constant(1, 3.0);  // on the goal boundary
  CHECK_THROWS_AS(synthesize(StateBox::cube(1, -3, -2), StateBox::cube(1, 1, 3), StateBox::cube(1, -5, 5), o),
                  InfeasibleGoal);
}

TEST_CASE("bad options are domain errors") {
  SynthesisOptions o = opts(1);
  o.decay[0] = 0.0;
  CHECK_THROWS_AS(synthesize(StateBox::cube(1, -3, -2), StateBox::cube(1, 1, 3), StateBox::cube(1, -5, 5), o),
                  DomainError);
  CHECK_THROWS_AS(synthesize(StateBox::cube(1, -6, -2), StateBox::cube(1, 1, 3), StateBox::cube(1, -5, 5), opts(1)),
                  DomainError);
}

TEST_CASE("width profile") {
  const auto s = scalar_spec(5.0, 0.1, 1.0, 1.0, 1.0);
  CHECK(s.width(0, 0.0) == doctest::Approx(5.1));
  CHECK(s.width(0, std::log(5.0)) == doctest::Approx(1.1).epsilon(1e-14));
  CHECK(s.width(0, 1e3) == doctest::Approx(0.1));
  CHECK(s.width_rate(0, 0.0) == doctest::Approx(-5.0));
}

TEST_CASE("transform values and domain") {
  CHECK(transform_scalar(0.0, 1.0, 0.2) == 0.0);
  CHECK(transform_scalar(0.5, 1.0, 1.0) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(inverse_transform_scalar(std::log(3.0), 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  const auto s = scalar_spec(1.0, 0.0, 1.0, 1.0, 1.0);
  CHECK_THROWS_AS(transform(s, Vector::Constant(1, 1.0), 0.0), OutsideFunnel);
  CHECK_THROWS_AS(transform(s, Vector::Constant(1, -1.0), 0.0), OutsideFunnel);
  const auto e = transform(s, Vector::Constant(1, 0.3), 0.5);
  CHECK(e.phi[0] > 0.0);
  CHECK(e.alpha[0] > 0.0);
  CHECK(e.alpha[0] <= 1.0);
}

TEST_CASE("transform round trip, limited only by the conditioning of the inverse") {
  // Near the funnel edge xi is ill-conditioned in m: one rounding of m moves xi by about
  // ulp(max(c, d)) * dxi/dm. The bound below is that, plus 1e-10.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double c = 0.05 + 5 * u(rng), d = 0.05 + 5 * u(rng), xi = -20 + 40 * u(rng);
    const double m = inverse_transform_scalar(xi, c, d);
    REQUIRE(m > -c);
    REQUIRE(m < d);
    const double slope = (c + d) / ((c + m) * (d - m));
    const double tol = 1e-10 + 4 * std::numeric_limits<double>::epsilon() * std::max(c, d) * slope;
    CHECK(std::abs(transform_scalar(m, c, d) - xi) <= tol);
    if (std::abs(xi) <= 12) CHECK(std::abs(transform_scalar(m, c, d) - xi) <= 1e-10);
  }
}

TEST_CASE("synthesized funnels cover the start, nest, and end in the goal") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + trial % 4;
    const auto [start, goal] = random_boxes(rng, n);
    SynthesisOptions o = opts(n);
    for (Index i = 0; i < n; ++i) o.decay[i] = 0.2 + 2.0 * (trial % 7) / 7.0;
    const auto s = synthesize(start, goal, StateBox::cube(n, -5, 5), o);
    const auto& f = s.spec;
    const StateBox b0 = f.box(0.0);
    for (Index i = 0; i < n; ++i) {
      // The open funnel at t = 0 contains the start box.
      CHECK(b0.lower()[i] < start.lower()[i]);
      CHECK(b0.upper()[i] > start.upper()[i]);
      // Terminal interval strictly inside the goal.
      CHECK(f.terminal_box().lower()[i] >= goal.lower()[i]);
      CHECK(f.terminal_box().upper()[i] <= goal.upper()[i]);
      CHECK(f.attractor[i] > goal.lower()[i]);
      CHECK(f.attractor[i] < goal.upper()[i]);
      CHECK(f.lower_ratio[i] > 0.0);
      CHECK(f.upper_ratio[i] > 0.0);
      CHECK(std::max(f.lower_ratio[i], f.upper_ratio[i]) == doctest::Approx(1.0));
    }
    for (double t = 0.0; t < 10.0; t += 0.25) CHECK(f.box(t).contains(f.box(t + 0.25)));
  }
}

}  // TEST_SUITE
