#include "doctest.h"

#include "gpfunnel/errors.hpp"
#include "gpfunnel/sim.hpp"

#include <cmath>
#include <memory>

using namespace gpfunnel;

namespace {

struct CaseStudy {
  Plant plant = case_study_plant();
  std::shared_ptr<const GPModel> model;
  StateBox start = StateBox::cube(2, -3, -2);
  StateBox goal = StateBox::cube(2, 1, 3);

  CaseStudy() {
    KernelParams p;
    p.dims = {SeKernel{316.0, Vector{{2.9, 177.0}}}, SeKernel{25.3, Vector{{1.67, 50.5}}}};
    model = std::make_shared<const GPModel>(sample_measurements(plant, plant.box, 50, 0.01, 38), p, plant.box);
  }

  ControlLaw law(double decay) const {
    SynthesisOptions o;
    o.decay = Vector::Constant(2, decay);
    BoundSet b;
    b.scale = Vector::Constant(2, 1.0);
    return ControlLaw(model, b, synthesize(start, goal, plant.box, o).spec, plant.input_map);
  }

  SimConfig config(double dt = 1e-3) const {
    SimConfig c;
    c.dt = dt;
    c.goal = goal;
    return c;
  }
};

const CaseStudy& case_study() {
  static const CaseStudy cs;
  return cs;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("case-study vector field") {
  const Plant p = case_study_plant();
  CHECK(p.drift(Vector::Zero(2)).norm() == 0.0);
  const Vector far = p.drift(Vector{{60.0, 0.0}});
  CHECK(far[1] == doctest::Approx(-0.5));
  const Vector x{{0.7, -1.2}};
  const Vector f = p.drift(x);
  CHECK(f[0] == doctest::Approx(0.7 + (std::cos(0.7) - 1.0) * -1.2).epsilon(1e-15));
  CHECK(f[1] == doctest::Approx(-(1.0 / (1.0 + std::exp(-1.4)) - 0.5) - 1.2).epsilon(1e-15));
  CHECK(p.input_map(x).isIdentity());
  CHECK_THROWS_AS(make_plant("pendulum"), InputError);
}

TEST_CASE("measurements: exact without noise, calibrated noise, deterministic") {
  const Plant p = case_study_plant();
  const Dataset clean = sample_measurements(p, p.box, 40, 0.0, 1);
  for (Index r = 0; r < clean.size(); ++r) {
    CHECK((clean.targets().row(r).transpose() - p.drift(clean.input(r))).norm() == 0.0);
    CHECK(p.box.contains(clean.input(r)));
  }
  const Dataset noisy = sample_measurements(p, p.box, 100'000, 0.01, 2);
  double ss = 0.0;
  for (Index r = 0; r < noisy.size(); ++r) {
    ss += (noisy.targets().row(r).transpose() - p.drift(noisy.input(r))).squaredNorm();
  }
  const double sd = std::sqrt(ss / (2.0 * static_cast<double>(noisy.size())));
  CHECK(std::abs(sd - 0.01) < 0.02 * 0.01);
  const Dataset again = sample_measurements(p, p.box, 100'000, 0.01, 2);
  CHECK(again.targets() == noisy.targets());
  const Dataset traj = sample_measurements(p, p.box, 60, 0.01, 3, SamplingMode::trajectory);
  CHECK(traj.size() == 60);
  for (Index r = 0; r < traj.size(); ++r) CHECK(p.box.contains(traj.input(r)));
}

TEST_CASE("zero plant held at the attractor stays there") {
  Plant p;
  p.name = "zero";
  p.drift = [](const Vector& x) { return Vector::Zero(x.size()); };
  p.input_map = [](const Vector&) { return Matrix::Identity(1, 1); };
  p.box = StateBox::cube(1, -1, 1);
  p.input_dim = 1;
  Matrix x = Matrix::Zero(1, 1), y = Matrix::Zero(1, 1);
  auto model = std::make_shared<const GPModel>(Dataset(x, y, 0.01), KernelParams::uniform(1, 1.0, 1.0), p.box);
  FunnelSpec s;
  s.attractor = Vector::Zero(1);
  s.width0 = s.width_inf = s.decay = s.lower_ratio = s.upper_ratio = Vector::Ones(1);
  BoundSet b;
  b.scale = Vector::Zero(1);
  SimConfig c;
  c.t_max = 1.0;
  c.stop_on_reach = false;
  const auto tr = integrate(p, ControlLaw(model, b, s, p.input_map), Vector::Zero(1), c);
  CHECK(tr.states.back().norm() == 0.0);
  CHECK(tr.size() == 1001);
}

TEST_CASE("case study reaches the goal, stays in the funnel, and is step-size stable") {
  const auto& cs = case_study();
  const auto law = cs.law(1.0);
  const Vector x0{{-2.5, -2.5}};
  const auto a = integrate(cs.plant, law, x0, cs.config(1e-3));
  REQUIRE(a.reach_time.has_value());
  CHECK(*a.reach_time < 10.0);
  CHECK(funnel_audit(a, law.spec()).ok());
  CHECK(reach_check(a, cs.goal) == a.reach_time);

  SimConfig fixed = cs.config(1e-3);
  fixed.stop_on_reach = false;
  fixed.t_max = 1.0;
  SimConfig half = fixed;
  half.dt = 5e-4;
  const auto f1 = integrate(cs.plant, law, x0, fixed);
  const auto f2 = integrate(cs.plant, law, x0, half);
  CHECK((f1.states.back() - f2.states.back()).norm() < 1e-3);

  const auto again = integrate(cs.plant, law, x0, fixed);
  CHECK(again.states.back() == f1.states.back());

  SimConfig euler = fixed;
  euler.integrator = Integrator::euler;
  CHECK((integrate(cs.plant, law, x0, euler).states.back() - f1.states.back()).norm() < 1e-2);
}

TEST_CASE("faster funnels reach sooner") {
  const auto& cs = case_study();
  double prev = INFINITY;
  for (double decay : {0.5, 1.0, 2.0}) {
    const auto tr = integrate(cs.plant, cs.law(decay), Vector{{-2.5, -2.5}}, cs.config(1e-3));
    REQUIRE(tr.reach_time.has_value());
    CHECK(*tr.reach_time < prev);
    prev = *tr.reach_time;
  }
}

TEST_CASE("starting outside the funnel raises FunnelExit at step 0") {
  const auto& cs = case_study();
  try {
    integrate(cs.plant, cs.law(1.0), Vector{{-4.9, -2.5}}, cs.config());
    FAIL("expected FunnelExit");
  } catch (const FunnelExit& e) {
    CHECK(e.step() == 0);
    CHECK(e.dim() == 0);
    CHECK_FALSE(e.upper());
    CHECK(e.partial().size() == 0);
  }
}

TEST_CASE("audit margins") {
  FunnelSpec s;
  s.attractor = Vector::Zero(1);
  s.width0 = Vector::Ones(1);
  s.width_inf = Vector::Constant(1, 0.5);
  s.decay = Vector::Ones(1);
  s.lower_ratio = Vector::Ones(1);
  s.upper_ratio = Vector::Constant(1, 0.5);
  Trajectory tr;
  tr.times = {0.0, 1.0, 2.0};
  tr.states = {Vector::Zero(1), Vector::Zero(1), Vector::Constant(1, 0.5 * s.width(0, 2.0))};
  const auto a = funnel_audit(tr, s);
  CHECK(a.margins[0][0] == doctest::Approx(0.5 * 1.5));
  CHECK(a.margins[1][0] == doctest::Approx(0.5 * s.width(0, 1.0)));
  REQUIRE(a.violations.size() == 1);
  CHECK(a.violations[0].step == 2);
  CHECK_FALSE(a.ok());
  CHECK(reach_check(tr, StateBox::cube(1, 0.1, 1.0)) == 2.0);
  CHECK_FALSE(reach_check(tr, StateBox::cube(1, 2.0, 3.0)).has_value());
}

TEST_CASE("config validation") {
  SimConfig c;
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  SimConfig d;
  d.stop_on_reach = true;
  CHECK_THROWS_AS(d.validate(), DomainError);
}

}  // TEST_SUITE
