#include "gpfunnel/pipeline.hpp"

#include "gpfunnel/io.hpp"
#include "gpfunnel/plot.hpp"

#include "ini.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <limits>

namespace gpfunnel {

namespace {

using ini::format_number;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

fs::path out_file(const RunConfig& c, const std::string& name) { return c.run.out / name; }

Plant plant_for(const RunConfig& c) {
  Plant plant = make_plant(c.run.plant);
  if (plant.state_dim() != c.funnel.start_lower.size()) {
    throw InputError(fmt::format("config vectors have {} entries but plant '{}' has {} states",
                                 c.funnel.start_lower.size(), c.run.plant, plant.state_dim()));
  }
  return plant;
}

KernelParams initial_params(const RunConfig& c) {
  KernelParams p;
  for (Index i = 0; i < c.kernel.signal_std.size(); ++i) {
    p.dims.push_back({c.kernel.signal_std[i], c.kernel.lengthscales[static_cast<std::size_t>(i)]});
  }
  return p;
}

std::shared_ptr<const GPModel> load_learned(const RunConfig& c) {
  const auto path = out_file(c, "model.ini");
  if (!fs::exists(path)) throw InputError("model file '" + path.string() + "' not found; run learn first");
  return std::make_shared<const GPModel>(load_model(path));
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

std::string num(double v) { return fmt::format("{:.6g}", v); }

void warn(std::vector<std::string>& sink, std::ostream& log, std::string msg) {
  log << "warning: " << msg << '\n';
  sink.push_back(std::move(msg));
}

RkhsBound rkhs_for(const RunConfig& c, const GPModel& model, std::vector<std::string>& warnings,
                   std::ostream& log) {
  const Index n = model.dim();
  if (c.bounds.rkhs_norm) {
    RkhsBound r;
    r.bound = *c.bounds.rkhs_norm;
    r.lipschitz = Vector::Constant(n, kNaN);
    r.kernel_grad_sup.resize(n);
    for (Index i = 0; i < n; ++i) r.kernel_grad_sup[i] = kernel_grad_sup(model.params()[i]);
    return r;
  }
  Vector lipschitz(n);
  if (c.bounds.lipschitz) {
    lipschitz = *c.bounds.lipschitz;
  } else {
    for (Index i = 0; i < n; ++i) {
      lipschitz[i] = c.bounds.lipschitz_safety * estimate_lipschitz_sqrt(model.data(), i);
    }
    warn(warnings, log,
         fmt::format("Lipschitz constants are data estimates (times {}), not certified bounds; neither is "
                     "the RKHS norm bound built on them (set [bounds] lipschitz or rkhs_norm to override)",
                     num(c.bounds.lipschitz_safety)));
  }
  return rkhs_bounds(lipschitz, model.params());
}

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(name, e, std::current_exception());
  }
}

struct SummaryRow {
  std::string quantity;
  double published;
  double produced;
};

}  // namespace

StageFailure::StageFailure(std::string stage, const std::exception& cause, std::exception_ptr original)
    : Error("stage '" + stage + "' failed: " + cause.what()), stage_(std::move(stage)), original_(std::move(original)) {}

bool SimulateResult::all_ok() const {
  for (const auto& r : runs) {
    if (!r.ok()) return false;
  }
  return true;
}

bool SimulateResult::all_reached() const {
  for (const auto& r : runs) {
    if (!r.reached()) return false;
  }
  return true;
}

// --- learn -------------------------------------------------------------------

LearnResult cmd_learn(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Plant plant = plant_for(c);
  const Index n = plant.state_dim();

  Dataset data;
  std::string source;
  if (c.dataset.path) {
    if (!fs::exists(*c.dataset.path)) throw InputError("dataset file '" + c.dataset.path->string() + "' not found");
    data = read_dataset_csv(*c.dataset.path, c.dataset.noise_std);
    if (data.dim() != n) {
      throw InputError(fmt::format("dataset '{}' has dimension {}, plant has {}", c.dataset.path->string(),
                                   data.dim(), n));
    }
    source = "file " + c.dataset.path->string();
  } else {
    data = sample_measurements(plant, plant.box, c.dataset.samples, c.dataset.noise_std, c.run.seed,
                               c.dataset.sampling);
    source = fmt::format("sampled from plant '{}' ({}, seed {})", plant.name, to_string(c.dataset.sampling),
                         c.run.seed);
  }

  FitOptions fit_options;
  fit_options.jitter = c.kernel.jitter;
  LearnResult result;
  KernelParams params = initial_params(c);
  if (c.kernel.fit) {
    OptimizeOptions opts;
    opts.restarts = c.kernel.restarts;
    opts.seed = c.run.seed;
    opts.fit = fit_options;
    result.fit = optimize_hyperparams(data, params, c.kernel.iterations, opts);
    params = result.fit->params;
    for (const auto& w : result.fit->warnings) log << "warning: " << w << '\n';
  }
  result.model = std::make_shared<const GPModel>(data, params, plant.box, fit_options);
  result.sigma_bar = max_std(*result.model, plant.box, c.bounds.grid);
  result.grid_cell = grid_cell_size(plant.box, c.bounds.grid);

  std::string r;
  r += fmt::format("samples      {} (noise_std {})\n", data.size(), num(data.noise_std()));
  r += "source       " + source + "\n";
  r += c.kernel.fit ? fmt::format("kernel       fitted, {} starts, {} iterations each\n", c.kernel.restarts,
                                  c.kernel.iterations)
                    : std::string("kernel       given (fitting off)\n");
  r += "\n" + pad("dim", 5) + pad("signal_std", 14) + pad("lengthscales", 26) + pad("log_evidence", 15) +
       "sigma_bar\n";
  for (Index i = 0; i < n; ++i) {
    const double ev = log_marginal_likelihood(data, params, i, fit_options).value;
    r += pad(std::to_string(i + 1), 5) + pad(num(params[i].signal_std), 14) +
         pad(format_vector(params[i].lengthscales, 6), 26) + pad(num(ev), 15) + num(result.sigma_bar[i]) + "\n";
  }
  r += fmt::format("\nsigma_bar is a maximum over a {0} x {0} grid (cell {1}); the true supremum may be larger\n",
                   c.bounds.grid, format_vector(result.grid_cell, 4));
  if (result.fit) {
    for (const auto& w : result.fit->warnings) r += "warning: " + w + "\n";
  }
  result.report = r;

  fs::create_directories(c.run.out);
  write_dataset_csv(out_file(c, "dataset.csv"), data);
  save_model(out_file(c, "model.ini"), *result.model, out_file(c, "dataset.csv"));
  write_text(out_file(c, "fit_report.txt"), r);
  log << r;
  return result;
}

// --- calibrate ---------------------------------------------------------------

CalibrateResult cmd_calibrate(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Plant plant = plant_for(c);
  const auto model = load_learned(c);
  CalibrateResult result;
  result.sigma_bar = max_std(*model, plant.box, c.bounds.grid);
  const Index n = model->dim();
  std::string r = fmt::format("method       {}\nsigma_bar    {}\n", to_string(c.bounds.method),
                              format_vector(result.sigma_bar));

  switch (c.bounds.method) {
    case BoundKind::probabilistic: {
      result.rkhs = rkhs_for(c, *model, result.warnings, log);
      Vector gamma(n);
      if (c.bounds.gamma) {
        gamma = *c.bounds.gamma;
        r += "gamma        " + format_vector(gamma) + " (given)\n";
      } else {
        for (Index i = 0; i < n; ++i) {
          gamma[i] = info_gain_greedy(*model, plant.box, model->data().size(), i, c.bounds.candidates).gamma;
        }
        r += "gamma        " + format_vector(gamma) + " (greedy over-approximation)\n";
      }
      result.gamma = gamma;
      result.bounds = probabilistic_bound_set(result.rkhs->bound, gamma, model->data().size(), c.bounds.epsilon);
      r += "B            " + format_vector(result.rkhs->bound) + "\n";
      r += fmt::format("epsilon      {}\n", num(c.bounds.epsilon));
      r += "beta         " + format_vector(result.bounds.scale) + "\n";
      r += "beta*sigma   " + format_vector(result.bounds.scale.cwiseProduct(result.sigma_bar)) + "\n";
      r += fmt::format("confidence   >= {}\n", num(result.bounds.confidence.lo));
      break;
    }
    case BoundKind::deterministic: {
      result.rkhs = rkhs_for(c, *model, result.warnings, log);
      result.bounds = deterministic_bound_set(result.rkhs->bound, *model);
      r += "L            " + format_vector(result.rkhs->lipschitz) + "\n";
      r += "B            " + format_vector(result.rkhs->bound) + "\n";
      r += "beta~        " + format_vector(result.bounds.scale) + "\n";
      r += "beta~*sigma  " + format_vector(result.bounds.scale.cwiseProduct(result.sigma_bar)) + "\n";
      break;
    }
    case BoundKind::monte_carlo: {
      CoverageOptions opts;
      opts.trials = c.bounds.trials;
      opts.confidence_level = c.bounds.confidence_level;
      opts.seed = c.run.seed;
      const Envelope env = c.bounds.envelope == EnvelopeMode::constant ? Envelope::constant(c.bounds.threshold)
                                                                       : Envelope::pointwise(c.bounds.threshold);
      result.coverage = monte_carlo_coverage(*model, plant.drift, plant.box, env, opts);
      if (env.mode == EnvelopeMode::constant) {
        result.bounds = monte_carlo_bound_set(*result.coverage, result.sigma_bar);
      } else {
        result.bounds.kind = BoundKind::monte_carlo;
        result.bounds.scale = c.bounds.threshold;
        result.bounds.confidence = result.coverage->interval;
      }
      result.common_scale =
          calibrate_common_scale(*model, plant.drift, plant.box, result.sigma_bar, c.bounds.target, opts);
      r += format_coverage(*result.coverage);
      r += "beta         " + format_vector(result.bounds.scale) + "\n";
      r += fmt::format("at coverage {}: envelope {} (common scale {} on sigma_bar)\n", num(c.bounds.target),
                       format_vector(*result.common_scale * result.sigma_bar), num(*result.common_scale));
      write_text(out_file(c, "coverage.csv"),
                 coverage_csv_header(n) + "\n" + coverage_csv_row(*result.coverage) + "\n");
      write_text(out_file(c, "coverage.txt"), format_coverage(*result.coverage));
      break;
    }
  }
  for (const auto& w : result.warnings) r += "warning: " + w + "\n";
  result.report = r;
  save_bounds(out_file(c, "bounds.ini"), result.bounds);
  write_text(out_file(c, "calibration.txt"), r);
  log << r;
  return result;
}

// --- synthesize --------------------------------------------------------------

SynthesizeResult cmd_synthesize(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Plant plant = plant_for(c);
  SynthesisOptions opts;
  opts.decay = c.funnel.decay;
  opts.shrink = c.funnel.shrink;
  opts.attractor = c.funnel.attractor;
  SynthesizeResult result{synthesize(c.start_box(), c.goal_box(), plant.box, opts), {}};
  const FunnelSpec& s = result.synthesis.spec;
  std::string t = pad("dim", 5) + pad("case", 10) + pad("eta", 10) + pad("rho_0", 10) + pad("rho_inf", 12) +
                  pad("decay", 8) + pad("c", 10) + "d\n";
  for (Index i = 0; i < s.dim(); ++i) {
    t += pad(std::to_string(i + 1), 5) +
         pad(result.synthesis.overlapping[static_cast<std::size_t>(i)] ? "overlap" : "disjoint", 10) +
         pad(num(s.attractor[i]), 10) + pad(num(s.width0[i]), 10) + pad(num(s.width_inf[i]), 12) +
         pad(num(s.decay[i]), 8) + pad(num(s.lower_ratio[i]), 10) + num(s.upper_ratio[i]) + "\n";
  }
  for (const auto& w : result.synthesis.warnings) t += "warning: " + w + "\n";
  result.table = t;
  fs::create_directories(c.run.out);
  save_funnel(out_file(c, "funnel.ini"), s);
  write_text(out_file(c, "funnel_table.txt"), t);
  write_funnel_bounds_csv(out_file(c, "funnel_bounds.csv"), s, c.sim.t_max, std::max(c.sim.dt, c.sim.t_max / 1000.0));
  log << t;
  return result;
}

// --- simulate ----------------------------------------------------------------

std::vector<Vector> initial_states(const RunConfig& c) {
  if (c.sim.initial) return {*c.sim.initial};
  const StateBox start = c.start_box();
  if (c.sim.grid == 1) return {start.center()};
  return grid_points(start, c.sim.grid);
}

double lyapunov_check(const Trajectory& traj, double tolerance) {
  if (traj.size() < 2) return 1.0;
  std::size_t ok = 0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dt = traj.times[k + 1] - traj.times[k];
    const double rate = (traj.lyapunov[k + 1] - traj.lyapunov[k]) / dt;
    // The difference quotient is a midpoint estimate, so compare against the step average.
    const double bound = 0.5 * (traj.lyapunov_bound[k] + traj.lyapunov_bound[k + 1]);
    if (rate <= bound + tolerance) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(traj.size() - 1);
}

SimulateResult cmd_simulate(const RunConfig& c, std::ostream& log) {
  c.validate();
  const Plant plant = plant_for(c);
  const auto model = load_learned(c);
  const auto bounds_path = out_file(c, "bounds.ini");
  const auto funnel_path = out_file(c, "funnel.ini");
  if (!fs::exists(bounds_path)) throw InputError("bounds file '" + bounds_path.string() + "' not found; run calibrate first");
  if (!fs::exists(funnel_path)) throw InputError("funnel file '" + funnel_path.string() + "' not found; run synthesize first");
  ControlOptions copts;
  copts.sign_smoothing = c.sim.sign_smoothing;
  const ControlLaw law(model, load_bounds(bounds_path), load_funnel(funnel_path), plant.input_map, copts);

  SimConfig sc;
  sc.dt = c.sim.dt;
  sc.t_max = c.sim.t_max;
  sc.integrator = c.sim.integrator;
  sc.stop_on_reach = c.sim.stop_on_reach;
  sc.goal = c.goal_box();
  sc.seed = c.run.seed;

  SimulateResult result;
  std::string audit_csv = "run";
  for (Index i = 0; i < plant.state_dim(); ++i) audit_csv += ",x0_" + std::to_string(i + 1);
  audit_csv += ",reached,reach_time,steps,min_margin,violations,exit_step,lyapunov_ok_fraction\n";
  std::vector<Trajectory> drawn;
  const auto starts = initial_states(c);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    RunOutcome run;
    run.initial = starts[k];
    try {
      run.trajectory = integrate(plant, law, starts[k], sc);
    } catch (const FunnelExit& e) {
      run.trajectory = e.partial();
      run.exit_step = e.step();
      run.exit_message = e.what();
      log << fmt::format("run {}: {}\n", k + 1, e.what());
    }
    run.audit = funnel_audit(run.trajectory, law.spec());
    run.lyapunov_ok_fraction = lyapunov_check(run.trajectory, 1e-2);
    // A run that starts outside the funnel has no samples; its audit row still records the exit.
    if (run.trajectory.size()) {
      write_trajectory_csv(out_file(c, fmt::format("trajectory_{:02}.csv", k + 1)), run.trajectory);
    }
    audit_csv += std::to_string(k + 1);
    for (Index i = 0; i < run.initial.size(); ++i) audit_csv += "," + format_number(run.initial[i]);
    audit_csv += fmt::format(",{},{},{},{},{},{},{}\n", run.reached() ? 1 : 0,
                             run.reached() ? format_number(*run.trajectory.reach_time) : std::string(),
                             run.trajectory.size(),
                             run.trajectory.size() ? format_number(run.audit.min_margin) : std::string(),
                             run.audit.violations.size(),
                             run.exit_step ? std::to_string(*run.exit_step) : std::string(),
                             format_number(run.lyapunov_ok_fraction));
    drawn.push_back(run.trajectory);
    result.runs.push_back(std::move(run));
  }

  std::size_t reached = 0, clean = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double worst_reach = 0.0;
  for (const auto& r : result.runs) {
    reached += r.reached();
    clean += r.ok();
    if (r.trajectory.size()) min_margin = std::min(min_margin, r.audit.min_margin);
    if (r.reached()) worst_reach = std::max(worst_reach, *r.trajectory.reach_time);
  }
  std::string rep = fmt::format("runs         {}\n", result.runs.size());
  rep += fmt::format("reached goal {} of {}{}\n", reached, result.runs.size(),
                     reached ? fmt::format(" (latest at t = {})", num(worst_reach)) : std::string());
  rep += fmt::format("inside funnel {} of {} (smallest margin {})\n", clean, result.runs.size(), num(min_margin));
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    const auto& r = result.runs[k];
    if (r.exit_step) rep += fmt::format("run {} left the funnel at step {}\n", k + 1, *r.exit_step);
    else if (!r.audit.ok()) rep += fmt::format("run {} has {} audit violations\n", k + 1, r.audit.violations.size());
  }
  result.report = rep;

  write_text(out_file(c, "audit.csv"), audit_csv);
  write_text(out_file(c, "simulate.txt"), rep);
  const StateBox view = plant.box;
  write_text(out_file(c, "state_space.svg"), plot_state_space(drawn, c.start_box(), c.goal_box(), view));
  write_text(out_file(c, "funnel_time.svg"), plot_funnel_time(drawn, law.spec(), c.sim.t_max));
  log << rep;
  return result;
}

// --- reproduce ---------------------------------------------------------------

RunConfig case_study_config(std::uint64_t seed) {
  RunConfig c;
  c.run.seed = seed;
  c.kernel.fit = false;
  c.bounds.method = BoundKind::monte_carlo;
  return c;
}

ReproduceResult cmd_reproduce_case_study(const RunConfig& config, std::ostream& log) {
  RunConfig c = config;
  c.bounds.method = BoundKind::monte_carlo;
  stage("config", [&] {
    c.validate();
    fs::create_directories(c.run.out);
    write_text(out_file(c, "config.ini"), serialize_config(c));
    return 0;
  });
  const auto started = std::chrono::system_clock::now();

  ReproduceResult result;
  log << "== learn\n";
  result.learn = stage("learn", [&] { return cmd_learn(c, log); });
  log << "== calibrate\n";
  result.calibrate = stage("calibrate", [&] { return cmd_calibrate(c, log); });

  // The deterministic bound is computed alongside for the conservativeness comparison.
  const GPModel& model = *result.learn.model;
  const Index n = model.dim();
  Vector beta_det = Vector::Constant(n, kNaN);
  std::vector<std::string> notes;
  stage("calibrate", [&] {
    const RkhsBound rkhs = rkhs_for(c, model, notes, log);
    for (Index i = 0; i < n; ++i) {
      try {
        beta_det[i] = beta_deterministic(rkhs.bound[i], model, i);
      } catch (const NegativeRadicand& e) {
        notes.push_back(e.what());
        log << "warning: " << e.what() << '\n';
      }
    }
    log << "beta~        " << format_vector(beta_det) << '\n';
    return 0;
  });

  log << "== synthesize\n";
  result.synthesize = stage("synthesize", [&] { return cmd_synthesize(c, log); });
  log << "== simulate\n";
  result.simulate = stage("simulate", [&] { return cmd_simulate(c, log); });

  const Vector& sb = result.calibrate.sigma_bar;
  const auto& cov = *result.calibrate.coverage;
  const double s = *result.calibrate.common_scale;
  std::vector<SummaryRow> rows;
  for (Index i = 0; i < n && i < 2; ++i) {
    rows.push_back({fmt::format("sigma_bar_{}", i + 1), PublishedValues::sigma_bar[i], sb[i]});
  }
  rows.push_back({"sigma_bar_max", PublishedValues::sigma_bar_max, sb.maxCoeff()});
  rows.push_back({"coverage_lower", PublishedValues::coverage_interval[0], cov.interval.lo});
  rows.push_back({"coverage_upper", PublishedValues::coverage_interval[1], cov.interval.hi});
  rows.push_back({"coverage_empirical", kNaN, cov.empirical()});
  for (Index i = 0; i < n && i < 2; ++i) {
    rows.push_back({fmt::format("beta_det_{}", i + 1), PublishedValues::beta_deterministic[i], beta_det[i]});
  }
  for (Index i = 0; i < n && i < 2; ++i) {
    rows.push_back({fmt::format("beta_det_sigma_bar_{}", i + 1), PublishedValues::deterministic_envelope[i],
                    beta_det[i] * sb[i]});
  }
  for (Index i = 0; i < n && i < 2; ++i) {
    rows.push_back({fmt::format("monte_carlo_envelope_{}", i + 1), PublishedValues::monte_carlo_envelope[i], s * sb[i]});
  }
  std::size_t reached = 0, clean = 0;
  for (const auto& r : result.simulate.runs) {
    reached += r.reached();
    clean += r.ok();
  }
  const auto runs = static_cast<double>(result.simulate.runs.size());
  rows.push_back({"runs_reaching_goal", runs, static_cast<double>(reached)});
  rows.push_back({"runs_inside_funnel", runs, static_cast<double>(clean)});

  std::string csv = "quantity,published,produced,deviation,relative_deviation\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
  for (const auto& row : rows) {
    const double dev = row.produced - row.published;
    csv += fmt::format("{},{},{},{},{}\n", row.quantity, cell(row.published), cell(row.produced), cell(dev),
                       cell(row.published != 0.0 ? dev / row.published : kNaN));
  }
  result.summary_csv = csv;
  write_text(out_file(c, "summary.csv"), csv);

  const auto finished = std::chrono::system_clock::now();
  std::string meta;
  meta += fmt::format("started   {:%Y-%m-%dT%H:%M:%S}Z\n", fmt::gmtime(std::chrono::system_clock::to_time_t(started)));
  meta += fmt::format("finished  {:%Y-%m-%dT%H:%M:%S}Z\n", fmt::gmtime(std::chrono::system_clock::to_time_t(finished)));
  meta += fmt::format("seed      {}\n", c.run.seed);
  meta += fmt::format("trials    {}\n", c.bounds.trials);
  for (const auto& note : notes) meta += "note      " + note + "\n";
  write_text(out_file(c, "metadata.txt"), meta);
  log << "== summary\n" << csv;
  return result;
}

}  // namespace gpfunnel
