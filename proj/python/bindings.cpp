#include "gpfunnel/bounds.hpp"
#include "gpfunnel/config.hpp"
#include "gpfunnel/controller.hpp"
#include "gpfunnel/errors.hpp"
#include "gpfunnel/funnel.hpp"
#include "gpfunnel/gp.hpp"
#include "gpfunnel/io.hpp"
#include "gpfunnel/pipeline.hpp"
#include "gpfunnel/sim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace gpfunnel;

namespace {

// Rows are samples.
Matrix stack(const std::vector<Vector>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Index>(k)) = rows[k].transpose();
  return m;
}

KernelParams kernels_from(const std::vector<std::pair<double, Vector>>& dims) {
  KernelParams p;
  for (const auto& [s, l] : dims) p.dims.push_back({s, l});
  return p;
}

std::vector<std::pair<double, Vector>> kernels_to(const KernelParams& p) {
  std::vector<std::pair<double, Vector>> out;
  for (const auto& k : p.dims) out.emplace_back(k.signal_std, k.lengthscales);
  return out;
}

py::dict coverage_dict(const CoverageReport& r) {
  py::dict d;
  d["hits"] = r.hits;
  d["trials"] = r.trials;
  d["empirical"] = r.empirical();
  d["interval"] = py::make_tuple(r.interval.lo, r.interval.hi);
  d["confidence_level"] = r.confidence_level;
  d["seed"] = r.seed;
  return d;
}

// Pipeline stages log into a string the caller gets back.
template <class F>
auto logged(F&& f) {
  std::ostringstream log;
  auto result = f(log);
  return std::make_pair(std::move(result), log.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "GP-learned dynamics, funnel controller synthesis and closed-loop simulation";

  // Errors. Subclasses are registered after their bases so they are matched first.
  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", error);
  py::register_exception<InputError>(m, "InputError", error);
  auto factorization = py::register_exception<FactorizationFailure>(m, "FactorizationFailure", error);
  py::register_exception<SingularInputMap>(m, "SingularInputMap", factorization);
  py::register_exception<NegativeRadicand>(m, "NegativeRadicand", error);
  py::register_exception<InfeasibleGoal>(m, "InfeasibleGoal", error);
  py::register_exception<DegenerateDim>(m, "DegenerateDim", error);
  py::register_exception<OutsideFunnel>(m, "OutsideFunnel", error);
  py::register_exception<NumericalBlowup>(m, "NumericalBlowup", error);
  py::register_exception<FunnelExit>(m, "FunnelExit", error);
  py::register_exception<StageFailure>(m, "StageFailure", error);

  py::class_<StateBox>(m, "StateBox")
      .def(py::init<Vector, Vector>(), py::arg("lower"), py::arg("upper"))
      .def_static("cube", &StateBox::cube, py::arg("dim"), py::arg("lo"), py::arg("hi"))
      .def_property_readonly("lower", &StateBox::lower)
      .def_property_readonly("upper", &StateBox::upper)
      .def_property_readonly("dim", &StateBox::dim)
      .def("contains", py::overload_cast<const Vector&>(&StateBox::contains, py::const_), py::arg("x"))
      .def("__repr__", [](const StateBox& b) {
        return "StateBox(" + format_vector(b.lower()) + ", " + format_vector(b.upper()) + ")";
      });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<Matrix, Matrix, double>(), py::arg("inputs"), py::arg("targets"), py::arg("noise_std"))
      .def_property_readonly("inputs", &Dataset::inputs)
      .def_property_readonly("targets", &Dataset::targets)
      .def_property_readonly("noise_std", &Dataset::noise_std)
      .def("__len__", &Dataset::size);

  // Kernels cross the boundary as a list of (signal_std, lengthscales) pairs.
  py::class_<GPModel, std::shared_ptr<GPModel>>(m, "GPModel")
      .def(py::init([](Dataset data, const std::vector<std::pair<double, Vector>>& kernels, StateBox box,
                       double jitter) {
             return std::make_shared<GPModel>(std::move(data), kernels_from(kernels), std::move(box),
                                              FitOptions{jitter});
           }),
           py::arg("data"), py::arg("kernels"), py::arg("box"), py::arg("jitter") = 0.0)
      .def("mean", py::overload_cast<const Vector&>(&GPModel::mean, py::const_), py::arg("x"))
      .def("stddev", &GPModel::stddev, py::arg("x"))
      .def("raw_variance", &GPModel::raw_variance, py::arg("i"), py::arg("x"))
      .def("quadratic_form", &GPModel::quadratic_form, py::arg("i"))
      .def_property_readonly("kernels", [](const GPModel& g) { return kernels_to(g.params()); })
      .def_property_readonly("data", &GPModel::data)
      .def_property_readonly("box", &GPModel::box)
      .def_property_readonly("dim", &GPModel::dim);

  m.def("max_std", &max_std, py::arg("model"), py::arg("box"), py::arg("grid_per_dim") = 101);
  m.def(
      "log_marginal_likelihood",
      [](const Dataset& d, const std::vector<std::pair<double, Vector>>& kernels, Index i, double jitter) {
        const auto e = log_marginal_likelihood(d, kernels_from(kernels), i, FitOptions{jitter});
        return py::make_tuple(e.value, e.gradient);
      },
      py::arg("data"), py::arg("kernels"), py::arg("i"), py::arg("jitter") = 0.0,
      "Log evidence of output i and its gradient in (log signal_std, log lengthscales).");
  m.def(
      "optimize_hyperparams",
      [](const Dataset& d, const std::vector<std::pair<double, Vector>>& init, int budget, int restarts,
         std::uint64_t seed) {
        OptimizeOptions o;
        o.restarts = restarts;
        o.seed = seed;
        const auto fit = optimize_hyperparams(d, kernels_from(init), budget, o);
        py::dict r;
        r["kernels"] = kernels_to(fit.params);
        r["log_evidence"] = fit.log_evidence;
        r["init_log_evidence"] = fit.init_log_evidence;
        r["improved"] = fit.improved;
        r["warnings"] = fit.warnings;
        return r;
      },
      py::arg("data"), py::arg("init"), py::arg("budget") = 200, py::arg("restarts") = 8, py::arg("seed") = 0,
      py::call_guard<py::gil_scoped_release>());

  // Bounds.
  py::enum_<BoundKind>(m, "BoundKind")
      .value("probabilistic", BoundKind::probabilistic)
      .value("deterministic", BoundKind::deterministic)
      .value("monte_carlo", BoundKind::monte_carlo);

  py::class_<BoundSet>(m, "BoundSet")
      .def(py::init([](BoundKind kind, Vector scale) {
             BoundSet b;
             b.kind = kind;
             b.scale = std::move(scale);
             if (kind == BoundKind::deterministic) b.confidence = {1.0, 1.0};
             b.validate();
             return b;
           }),
           py::arg("kind"), py::arg("scale"))
      .def_readonly("kind", &BoundSet::kind)
      .def_readonly("scale", &BoundSet::scale)
      .def_property_readonly("confidence", [](const BoundSet& b) { return py::make_tuple(b.confidence.lo, b.confidence.hi); });

  m.def("beta_probabilistic", &beta_probabilistic, py::arg("rkhs_norm"), py::arg("gamma"), py::arg("samples"),
        py::arg("epsilon"));
  m.def(
      "info_gain_greedy",
      [](const GPModel& model, const StateBox& box, Index budget, Index i, Index candidates) {
        const auto g = info_gain_greedy(model, box, budget, i, candidates);
        return py::make_tuple(g.gamma, g.greedy_value);
      },
      py::arg("model"), py::arg("box"), py::arg("budget"), py::arg("i"), py::arg("candidates") = 500,
      "Returns (gamma, greedy_value); gamma = greedy_value / (1 - 1/e).");
  m.def("rkhs_bound",
        [](double lipschitz, double signal_std, const Vector& lengthscales) {
          KernelParams p;
          p.dims = {SeKernel{signal_std, lengthscales}};
          return rkhs_bound(lipschitz, p, 0);
        },
        py::arg("lipschitz"), py::arg("signal_std"), py::arg("lengthscales"));
  m.def("estimate_lipschitz_sqrt", &estimate_lipschitz_sqrt, py::arg("data"), py::arg("i"));
  m.def("beta_deterministic", &beta_deterministic, py::arg("rkhs_bound"), py::arg("model"), py::arg("i"));
  m.def(
      "clopper_pearson",
      [](std::uint64_t hits, std::uint64_t trials, double level) {
        const auto iv = clopper_pearson(hits, trials, level);
        return py::make_tuple(iv.lo, iv.hi);
      },
      py::arg("hits"), py::arg("trials"), py::arg("confidence_level"));
  m.def(
      "monte_carlo_coverage",
      [](const GPModel& model, const Dynamics& truth, const StateBox& box, const Vector& values, bool pointwise,
         std::uint64_t trials, double level, std::uint64_t seed) {
        CoverageOptions o{trials, level, seed, 0};
        const Envelope env = pointwise ? Envelope::pointwise(values) : Envelope::constant(values);
        CoverageReport r;
        {
          py::gil_scoped_release release;
          r = monte_carlo_coverage(model, truth, box, env, o);
        }
        return coverage_dict(r);
      },
      py::arg("model"), py::arg("truth"), py::arg("box"), py::arg("envelope"), py::arg("pointwise") = false,
      py::arg("trials") = 1'000'000, py::arg("confidence_level") = 1.0 - 1e-10, py::arg("seed") = 0);

  // Funnel.
  py::class_<FunnelSpec>(m, "FunnelSpec")
      .def(py::init([](Vector attractor, Vector width0, Vector width_inf, Vector decay, Vector lower_ratio,
                       Vector upper_ratio) {
             FunnelSpec s{std::move(attractor), std::move(width0), std::move(width_inf), std::move(decay),
                          std::move(lower_ratio), std::move(upper_ratio)};
             s.validate();
             return s;
           }),
           py::arg("attractor"), py::arg("width0"), py::arg("width_inf"), py::arg("decay"), py::arg("lower_ratio"),
           py::arg("upper_ratio"))
      .def_readonly("attractor", &FunnelSpec::attractor)
      .def_readonly("width0", &FunnelSpec::width0)
      .def_readonly("width_inf", &FunnelSpec::width_inf)
      .def_readonly("decay", &FunnelSpec::decay)
      .def_readonly("lower_ratio", &FunnelSpec::lower_ratio)
      .def_readonly("upper_ratio", &FunnelSpec::upper_ratio)
      .def("width", &FunnelSpec::width, py::arg("i"), py::arg("t"))
      .def("box", &FunnelSpec::box, py::arg("t"));

  m.def(
      "synthesize",
      [](const StateBox& start, const StateBox& goal, const StateBox& space, Vector decay, double shrink,
         std::optional<Vector> attractor) {
        SynthesisOptions o;
        o.decay = std::move(decay);
        o.shrink = shrink;
        o.attractor = std::move(attractor);
        const auto s = synthesize(start, goal, space, o);
        return py::make_tuple(s.spec, s.warnings);
      },
      py::arg("start"), py::arg("goal"), py::arg("space"), py::arg("decay"), py::arg("shrink") = 0.5,
      py::arg("attractor") = py::none(), "Returns (spec, warnings).");
  m.def("transform_scalar", &transform_scalar, py::arg("modulated"), py::arg("c"), py::arg("d"));
  m.def("inverse_transform_scalar", &inverse_transform_scalar, py::arg("xi"), py::arg("c"), py::arg("d"));
  m.def(
      "transform", [](const FunnelSpec& s, const Vector& x, double t) { return transform(s, x, t).xi; },
      py::arg("spec"), py::arg("x"), py::arg("t"));
  m.def("inverse_transform", &inverse_transform, py::arg("spec"), py::arg("xi"));

  // Plant, control and simulation.
  py::class_<Plant>(m, "Plant")
      .def(py::init([](std::string name, Dynamics drift, InputMap input_map, StateBox box, Index input_dim) {
             return Plant{std::move(name), std::move(drift), std::move(input_map), std::move(box), input_dim};
           }),
           py::arg("name"), py::arg("drift"), py::arg("input_map"), py::arg("box"), py::arg("input_dim"))
      .def_readonly("name", &Plant::name)
      .def_readonly("box", &Plant::box)
      .def("drift", [](const Plant& p, const Vector& x) { return p.drift(x); }, py::arg("x"))
      .def("input_map", [](const Plant& p, const Vector& x) { return p.input_map(x); }, py::arg("x"));
  m.def("case_study_plant", &case_study_plant);
  m.def(
      "sample_measurements",
      [](const Plant& p, Index samples, double noise_std, std::uint64_t seed, const std::string& mode) {
        return sample_measurements(p, p.box, samples, noise_std, seed, sampling_mode_from_string(mode));
      },
      py::arg("plant"), py::arg("samples"), py::arg("noise_std"), py::arg("seed"), py::arg("mode") = "uniform");

  py::class_<ControlLaw>(m, "ControlLaw")
      .def(py::init([](std::shared_ptr<GPModel> model, BoundSet bound, FunnelSpec spec, const Plant& plant,
                       double sign_smoothing) {
             return ControlLaw(std::move(model), std::move(bound), std::move(spec), plant.input_map,
                               ControlOptions{sign_smoothing});
           }),
           py::arg("model"), py::arg("bound"), py::arg("spec"), py::arg("plant"), py::arg("sign_smoothing") = 0.0)
      .def("control", &ControlLaw::control, py::arg("x"), py::arg("t"))
      .def("robustness_term", &ControlLaw::robustness_term, py::arg("x"))
      .def_property_readonly("spec", &ControlLaw::spec);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("times", [](const Trajectory& t) { return t.times; })
      .def_property_readonly("states", [](const Trajectory& t) { return stack(t.states); })
      .def_property_readonly("inputs", [](const Trajectory& t) { return stack(t.inputs); })
      .def_property_readonly("xi", [](const Trajectory& t) { return stack(t.xi); })
      .def_property_readonly("lyapunov", [](const Trajectory& t) { return t.lyapunov; })
      .def_readonly("reach_time", &Trajectory::reach_time)
      .def("__len__", &Trajectory::size);

  m.def(
      "integrate",
      [](const Plant& p, const ControlLaw& law, const Vector& x0, double dt, double t_max, const std::string& integrator,
         std::optional<StateBox> goal, bool stop_on_reach) {
        SimConfig c;
        c.dt = dt;
        c.t_max = t_max;
        c.integrator = integrator_from_string(integrator);
        c.goal = std::move(goal);
        c.stop_on_reach = stop_on_reach && c.goal.has_value();
        py::gil_scoped_release release;
        return integrate(p, law, x0, c);
      },
      py::arg("plant"), py::arg("law"), py::arg("x0"), py::arg("dt") = 1e-3, py::arg("t_max") = 10.0,
      py::arg("integrator") = "rk4", py::arg("goal") = py::none(), py::arg("stop_on_reach") = true);
  m.def(
      "funnel_audit",
      [](const Trajectory& t, const FunnelSpec& s) {
        const auto a = funnel_audit(t, s);
        return py::make_tuple(a.min_margin, a.violations.size());
      },
      py::arg("trajectory"), py::arg("spec"), "Returns (min_margin, violation_count).");

  // Pipeline.
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("parse", &parse_config, py::arg("text"), py::arg("origin") = "<config>")
      .def_static("load", &load_config, py::arg("path"))
      .def_static("case_study", &case_study_config, py::arg("seed") = 38)
      .def("__str__", &serialize_config)
      .def("validate", &RunConfig::validate)
      .def_property(
          "seed", [](const RunConfig& c) { return c.run.seed; }, [](RunConfig& c, std::uint64_t v) { c.run.seed = v; })
      .def_property(
          "out", [](const RunConfig& c) { return c.run.out; },
          [](RunConfig& c, const std::filesystem::path& v) { c.run.out = v; })
      .def_property(
          "trials", [](const RunConfig& c) { return c.bounds.trials; },
          [](RunConfig& c, std::uint64_t v) { c.bounds.trials = v; })
      .def_property(
          "grid", [](const RunConfig& c) { return c.sim.grid; }, [](RunConfig& c, int v) { c.sim.grid = v; })
      .def_property(
          "fit", [](const RunConfig& c) { return c.kernel.fit; }, [](RunConfig& c, bool v) { c.kernel.fit = v; });

  m.def(
      "learn",
      [](const RunConfig& c) {
        py::gil_scoped_release release;
        return logged([&](std::ostream& log) { return cmd_learn(c, log).report; }).first;
      },
      py::arg("config"), "Runs the learn stage; returns its report.");
  m.def(
      "calibrate",
      [](const RunConfig& c) {
        py::gil_scoped_release release;
        return logged([&](std::ostream& log) { return cmd_calibrate(c, log).report; }).first;
      },
      py::arg("config"));
  m.def(
      "synthesize_stage",
      [](const RunConfig& c) {
        py::gil_scoped_release release;
        return logged([&](std::ostream& log) { return cmd_synthesize(c, log).table; }).first;
      },
      py::arg("config"));
  m.def(
      "simulate",
      [](const RunConfig& c) {
        SimulateResult r;
        {
          py::gil_scoped_release release;
          std::ostringstream log;
          r = cmd_simulate(c, log);
        }
        py::dict d;
        d["all_ok"] = r.all_ok();
        d["all_reached"] = r.all_reached();
        d["report"] = r.report;
        return d;
      },
      py::arg("config"));
  m.def(
      "reproduce",
      [](const RunConfig& c) {
        ReproduceResult r;
        std::string log;
        {
          py::gil_scoped_release release;
          std::tie(r, log) = logged([&](std::ostream& s) { return cmd_reproduce_case_study(c, s); });
        }
        py::dict d;
        d["summary_csv"] = r.summary_csv;
        d["sigma_bar"] = r.calibrate.sigma_bar;
        if (r.calibrate.coverage) d["coverage"] = coverage_dict(*r.calibrate.coverage);
        d["all_ok"] = r.simulate.all_ok();
        d["all_reached"] = r.simulate.all_reached();
        d["log"] = log;
        return d;
      },
      py::arg("config"), "Runs every stage of the case study into config.out.");
}
