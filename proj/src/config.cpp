#include "gpfunnel/config.hpp"

#include "ini.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace gpfunnel {

namespace {

std::string envelope_name(EnvelopeMode m) { return m == EnvelopeMode::constant ? "constant" : "pointwise"; }

EnvelopeMode envelope_from(const std::string& s) {
  if (s == "constant") return EnvelopeMode::constant;
  if (s == "pointwise") return EnvelopeMode::pointwise;
  throw InputError("[bounds] envelope: expected constant or pointwise, got '" + s + "'");
}

template <class T, class F>
T convert(const std::string& section, const std::string& key, const std::string& value, F&& f) {
  try {
    return f(value);
  } catch (const Error& e) {
    throw InputError("[" + section + "] " + key + ": " + e.what());
  }
}

[[noreturn]] void bad(const std::string& section, const std::string& key, const std::string& why) {
  throw InputError("[" + section + "] " + key + ": " + why);
}

void need_dim(const char* section, const char* key, const Vector& v, Index n) {
  if (v.size() != n) bad(section, key, fmt::format("needs {} values, got {}", n, v.size()));
}

void need_finite(const char* section, const char* key, const Vector& v) {
  if (!v.allFinite()) bad(section, key, "values must be finite");
}

void need_positive(const char* section, const char* key, const Vector& v) {
  if (!(v.array() > 0.0).all() || !v.allFinite()) bad(section, key, "values must be finite and > 0");
}

bool same(const std::optional<Vector>& a, const std::optional<Vector>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->size() == b->size() && *a == *b);
}

bool same(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

}  // namespace

void RunConfig::validate() const {
  const Index n = funnel.start_lower.size();
  if (n < 1) bad("funnel", "start_lower", "needs at least one value");
  if (dataset.samples < 1) bad("dataset", "samples", "must be >= 1");
  if (!(dataset.noise_std >= 0.0) || !std::isfinite(dataset.noise_std)) {
    bad("dataset", "noise_std", "must be finite and >= 0");
  }
  if (kernel.restarts < 1) bad("kernel", "restarts", "must be >= 1");
  if (kernel.iterations < 1) bad("kernel", "iterations", "must be >= 1");
  if (!(kernel.jitter >= 0.0) || !std::isfinite(kernel.jitter)) bad("kernel", "jitter", "must be finite and >= 0");
  need_dim("kernel", "signal_std", kernel.signal_std, n);
  need_positive("kernel", "signal_std", kernel.signal_std);
  if (static_cast<Index>(kernel.lengthscales.size()) != n) {
    bad("kernel", "lengthscales_" + std::to_string(kernel.lengthscales.size() + 1),
        fmt::format("need lengthscales_1..lengthscales_{}", n));
  }
  for (std::size_t i = 0; i < kernel.lengthscales.size(); ++i) {
    const auto key = "lengthscales_" + std::to_string(i + 1);
    need_dim("kernel", key.c_str(), kernel.lengthscales[i], n);
    need_positive("kernel", key.c_str(), kernel.lengthscales[i]);
  }

  if (bounds.grid < 2) bad("bounds", "grid", "must be >= 2");
  if (!(bounds.epsilon > 0.0 && bounds.epsilon < 1.0)) bad("bounds", "epsilon", "must lie in (0, 1)");
  if (bounds.gamma) {
    need_dim("bounds", "gamma", *bounds.gamma, n);
    if (!(bounds.gamma->array() >= 0.0).all() || !bounds.gamma->allFinite()) {
      bad("bounds", "gamma", "values must be finite and >= 0");
    }
  }
  if (bounds.candidates < 1) bad("bounds", "candidates", "must be >= 1");
  if (bounds.rkhs_norm) {
    need_dim("bounds", "rkhs_norm", *bounds.rkhs_norm, n);
    need_positive("bounds", "rkhs_norm", *bounds.rkhs_norm);
  }
  if (bounds.lipschitz) {
    need_dim("bounds", "lipschitz", *bounds.lipschitz, n);
    need_positive("bounds", "lipschitz", *bounds.lipschitz);
  }
  if (!(bounds.lipschitz_safety >= 1.0) || !std::isfinite(bounds.lipschitz_safety)) {
    bad("bounds", "lipschitz_safety", "must be finite and >= 1");
  }
  need_dim("bounds", "threshold", bounds.threshold, n);
  need_positive("bounds", "threshold", bounds.threshold);
  if (bounds.trials < 1) bad("bounds", "trials", "must be >= 1");
  if (!(bounds.confidence_level > 0.0 && bounds.confidence_level < 1.0)) {
    bad("bounds", "confidence_level", "must lie in (0, 1)");
  }
  if (!(bounds.target > 0.0 && bounds.target <= 1.0)) bad("bounds", "target", "must lie in (0, 1]");

  need_dim("funnel", "start_upper", funnel.start_upper, n);
  need_dim("funnel", "goal_lower", funnel.goal_lower, n);
  need_dim("funnel", "goal_upper", funnel.goal_upper, n);
  for (const auto* v : {&funnel.start_lower, &funnel.start_upper, &funnel.goal_lower, &funnel.goal_upper}) {
    need_finite("funnel", "start/goal", *v);
  }
  if (!(funnel.start_lower.array() <= funnel.start_upper.array()).all()) {
    bad("funnel", "start_lower", "must not exceed start_upper");
  }
  if (!(funnel.goal_lower.array() <= funnel.goal_upper.array()).all()) {
    bad("funnel", "goal_lower", "must not exceed goal_upper");
  }
  need_dim("funnel", "decay", funnel.decay, n);
  need_positive("funnel", "decay", funnel.decay);
  if (!(funnel.shrink > 0.0 && funnel.shrink <= 1.0)) bad("funnel", "shrink", "must lie in (0, 1]");
  if (funnel.attractor) {
    need_dim("funnel", "attractor", *funnel.attractor, n);
    need_finite("funnel", "attractor", *funnel.attractor);
  }

  if (!(sim.dt > 0.0) || !std::isfinite(sim.dt)) bad("sim", "dt", "must be finite and > 0");
  if (!(sim.t_max >= sim.dt) || !std::isfinite(sim.t_max)) bad("sim", "t_max", "must be finite and >= dt");
  if (sim.grid < 1) bad("sim", "grid", "must be >= 1");
  if (sim.initial) {
    need_dim("sim", "initial", *sim.initial, n);
    need_finite("sim", "initial", *sim.initial);
  }
  if (!(sim.sign_smoothing >= 0.0) || !std::isfinite(sim.sign_smoothing)) {
    bad("sim", "sign_smoothing", "must be finite and >= 0");
  }
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  auto r = ini::Reader::from_string(text, origin);
  RunConfig c;

  if (auto v = r.text("run", "plant")) c.run.plant = *v;
  if (auto v = r.integer("run", "seed")) {
    if (*v < 0) bad("run", "seed", "must be >= 0");
    c.run.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = r.text("run", "out")) c.run.out = *v;

  if (auto v = r.text("dataset", "path")) c.dataset.path = *v;
  if (auto v = r.integer("dataset", "samples")) c.dataset.samples = *v;
  if (auto v = r.number("dataset", "noise_std")) c.dataset.noise_std = *v;
  if (auto v = r.text("dataset", "sampling")) {
    c.dataset.sampling = convert<SamplingMode>("dataset", "sampling", *v, sampling_mode_from_string);
  }

  if (auto v = r.flag("kernel", "fit")) c.kernel.fit = *v;
  if (auto v = r.integer("kernel", "restarts")) c.kernel.restarts = static_cast<int>(*v);
  if (auto v = r.integer("kernel", "iterations")) c.kernel.iterations = static_cast<int>(*v);
  if (auto v = r.number("kernel", "jitter")) c.kernel.jitter = *v;
  if (auto v = r.numbers("kernel", "signal_std")) c.kernel.signal_std = *v;
  if (r.has("kernel", "lengthscales_1")) {
    c.kernel.lengthscales.clear();
    for (int i = 1; r.has("kernel", "lengthscales_" + std::to_string(i)); ++i) {
      c.kernel.lengthscales.push_back(*r.numbers("kernel", "lengthscales_" + std::to_string(i)));
    }
  }

  if (auto v = r.text("bounds", "method")) {
    c.bounds.method = convert<BoundKind>("bounds", "method", *v, bound_kind_from_string);
  }
  if (auto v = r.integer("bounds", "grid")) c.bounds.grid = static_cast<int>(*v);
  if (auto v = r.number("bounds", "epsilon")) c.bounds.epsilon = *v;
  if (auto v = r.numbers("bounds", "gamma")) c.bounds.gamma = *v;
  if (auto v = r.integer("bounds", "candidates")) c.bounds.candidates = *v;
  if (auto v = r.numbers("bounds", "rkhs_norm")) c.bounds.rkhs_norm = *v;
  if (auto v = r.numbers("bounds", "lipschitz")) c.bounds.lipschitz = *v;
  if (auto v = r.number("bounds", "lipschitz_safety")) c.bounds.lipschitz_safety = *v;
  if (auto v = r.text("bounds", "envelope")) c.bounds.envelope = envelope_from(*v);
  if (auto v = r.numbers("bounds", "threshold")) c.bounds.threshold = *v;
  if (auto v = r.integer("bounds", "trials")) {
    if (*v < 1) bad("bounds", "trials", "must be >= 1");
    c.bounds.trials = static_cast<std::uint64_t>(*v);
  }
  if (auto v = r.number("bounds", "confidence_level")) c.bounds.confidence_level = *v;
  if (auto v = r.number("bounds", "target")) c.bounds.target = *v;

  if (auto v = r.numbers("funnel", "start_lower")) c.funnel.start_lower = *v;
  if (auto v = r.numbers("funnel", "start_upper")) c.funnel.start_upper = *v;
  if (auto v = r.numbers("funnel", "goal_lower")) c.funnel.goal_lower = *v;
  if (auto v = r.numbers("funnel", "goal_upper")) c.funnel.goal_upper = *v;
  if (auto v = r.numbers("funnel", "decay")) c.funnel.decay = *v;
  if (auto v = r.number("funnel", "shrink")) c.funnel.shrink = *v;
  if (auto v = r.numbers("funnel", "attractor")) c.funnel.attractor = *v;

  if (auto v = r.number("sim", "dt")) c.sim.dt = *v;
  if (auto v = r.number("sim", "t_max")) c.sim.t_max = *v;
  if (auto v = r.text("sim", "integrator")) {
    c.sim.integrator = convert<Integrator>("sim", "integrator", *v, integrator_from_string);
  }
  if (auto v = r.flag("sim", "stop_on_reach")) c.sim.stop_on_reach = *v;
  if (auto v = r.integer("sim", "grid")) c.sim.grid = static_cast<int>(*v);
  if (auto v = r.numbers("sim", "initial")) c.sim.initial = *v;
  if (auto v = r.number("sim", "sign_smoothing")) c.sim.sign_smoothing = *v;

  r.reject_unknown();
  try {
    c.validate();
  } catch (const InputError& e) {
    throw InputError(origin + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str(), path.string());
  // Relative dataset paths are relative to the config file.
  if (c.dataset.path && c.dataset.path->is_relative() && path.has_parent_path()) {
    c.dataset.path = path.parent_path() / *c.dataset.path;
  }
  return c;
}

std::string serialize_config(const RunConfig& c) {
  ini::Writer w;
  w.set("run", "plant", c.run.plant);
  w.set("run", "seed", std::to_string(c.run.seed));
  w.set("run", "out", c.run.out.generic_string());

  if (c.dataset.path) w.set("dataset", "path", c.dataset.path->generic_string());
  w.set("dataset", "samples", std::to_string(c.dataset.samples));
  w.set("dataset", "noise_std", c.dataset.noise_std);
  w.set("dataset", "sampling", to_string(c.dataset.sampling));

  w.set_flag("kernel", "fit", c.kernel.fit);
  w.set("kernel", "restarts", std::to_string(c.kernel.restarts));
  w.set("kernel", "iterations", std::to_string(c.kernel.iterations));
  w.set("kernel", "jitter", c.kernel.jitter);
  w.set("kernel", "signal_std", c.kernel.signal_std);
  for (std::size_t i = 0; i < c.kernel.lengthscales.size(); ++i) {
    w.set("kernel", "lengthscales_" + std::to_string(i + 1), c.kernel.lengthscales[i]);
  }

  w.set("bounds", "method", to_string(c.bounds.method));
  w.set("bounds", "grid", std::to_string(c.bounds.grid));
  w.set("bounds", "epsilon", c.bounds.epsilon);
  if (c.bounds.gamma) w.set("bounds", "gamma", *c.bounds.gamma);
  w.set("bounds", "candidates", std::to_string(c.bounds.candidates));
  if (c.bounds.rkhs_norm) w.set("bounds", "rkhs_norm", *c.bounds.rkhs_norm);
  if (c.bounds.lipschitz) w.set("bounds", "lipschitz", *c.bounds.lipschitz);
  w.set("bounds", "lipschitz_safety", c.bounds.lipschitz_safety);
  w.set("bounds", "envelope", envelope_name(c.bounds.envelope));
  w.set("bounds", "threshold", c.bounds.threshold);
  w.set("bounds", "trials", std::to_string(c.bounds.trials));
  w.set("bounds", "confidence_level", c.bounds.confidence_level);
  w.set("bounds", "target", c.bounds.target);

  w.set("funnel", "start_lower", c.funnel.start_lower);
  w.set("funnel", "start_upper", c.funnel.start_upper);
  w.set("funnel", "goal_lower", c.funnel.goal_lower);
  w.set("funnel", "goal_upper", c.funnel.goal_upper);
  w.set("funnel", "decay", c.funnel.decay);
  w.set("funnel", "shrink", c.funnel.shrink);
  if (c.funnel.attractor) w.set("funnel", "attractor", *c.funnel.attractor);

  w.set("sim", "dt", c.sim.dt);
  w.set("sim", "t_max", c.sim.t_max);
  w.set("sim", "integrator", to_string(c.sim.integrator));
  w.set_flag("sim", "stop_on_reach", c.sim.stop_on_reach);
  w.set("sim", "grid", std::to_string(c.sim.grid));
  if (c.sim.initial) w.set("sim", "initial", *c.sim.initial);
  w.set("sim", "sign_smoothing", c.sim.sign_smoothing);
  return w.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  if (a.kernel.lengthscales.size() != b.kernel.lengthscales.size()) return false;
  for (std::size_t i = 0; i < a.kernel.lengthscales.size(); ++i) {
    if (!same(a.kernel.lengthscales[i], b.kernel.lengthscales[i])) return false;
  }
  return a.run.plant == b.run.plant && a.run.seed == b.run.seed && a.run.out == b.run.out &&
         a.dataset.path == b.dataset.path && a.dataset.samples == b.dataset.samples &&
         a.dataset.noise_std == b.dataset.noise_std && a.dataset.sampling == b.dataset.sampling &&
         a.kernel.fit == b.kernel.fit && a.kernel.restarts == b.kernel.restarts &&
         a.kernel.iterations == b.kernel.iterations && a.kernel.jitter == b.kernel.jitter &&
         same(a.kernel.signal_std, b.kernel.signal_std) && a.bounds.method == b.bounds.method &&
         a.bounds.grid == b.bounds.grid && a.bounds.epsilon == b.bounds.epsilon &&
         same(a.bounds.gamma, b.bounds.gamma) && a.bounds.candidates == b.bounds.candidates &&
         same(a.bounds.rkhs_norm, b.bounds.rkhs_norm) && same(a.bounds.lipschitz, b.bounds.lipschitz) &&
         a.bounds.lipschitz_safety == b.bounds.lipschitz_safety &&
         a.bounds.envelope == b.bounds.envelope && same(a.bounds.threshold, b.bounds.threshold) &&
         a.bounds.trials == b.bounds.trials && a.bounds.confidence_level == b.bounds.confidence_level &&
         a.bounds.target == b.bounds.target && same(a.funnel.start_lower, b.funnel.start_lower) &&
         same(a.funnel.start_upper, b.funnel.start_upper) && same(a.funnel.goal_lower, b.funnel.goal_lower) &&
         same(a.funnel.goal_upper, b.funnel.goal_upper) && same(a.funnel.decay, b.funnel.decay) &&
         a.funnel.shrink == b.funnel.shrink && same(a.funnel.attractor, b.funnel.attractor) &&
         a.sim.dt == b.sim.dt && a.sim.t_max == b.sim.t_max && a.sim.integrator == b.sim.integrator &&
         a.sim.stop_on_reach == b.sim.stop_on_reach && a.sim.grid == b.sim.grid &&
         same(a.sim.initial, b.sim.initial) && a.sim.sign_smoothing == b.sim.sign_smoothing;
}

}  // namespace gpfunnel
