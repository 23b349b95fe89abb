// gpfunnel: learn -> calibrate -> synthesize -> simulate from the command line.
//
// Exit codes: 0 success, 2 input error, 3 infeasible (goal, degenerate funnel or
// deterministic bound), 4 funnel exit or audit violation, 1 anything else.

#include "gpfunnel/config.hpp"
#include "gpfunnel/errors.hpp"
#include "gpfunnel/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <sstream>

using namespace gpfunnel;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInput = 2, kInfeasible = 3, kViolation = 4 };

int classify(std::exception_ptr p) {
  try {
    std::rethrow_exception(p);
  } catch (const StageFailure& e) {
    return e.original() ? classify(e.original()) : kFailure;
  } catch (const InputError&) {
    return kInput;
  } catch (const DomainError&) {
    return kInput;
  } catch (const InfeasibleGoal&) {
    return kInfeasible;
  } catch (const DegenerateDim&) {
    return kInfeasible;
  } catch (const NegativeRadicand&) {
    return kInfeasible;
  } catch (const FunnelExit&) {
    return kViolation;
  } catch (const OutsideFunnel&) {
    return kViolation;
  } catch (...) {
    return kFailure;
  }
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::uint64_t> trials;
  std::optional<int> grid;
  bool no_fit = false;
  bool quiet = false;
};

RunConfig build_config(const Flags& f, RunConfig base) {
  RunConfig c = f.config.empty() ? std::move(base) : load_config(f.config);
  if (f.seed) c.run.seed = *f.seed;
  if (!f.out.empty()) c.run.out = f.out;
  if (f.trials) c.bounds.trials = *f.trials;
  if (f.grid) c.sim.grid = *f.grid;
  if (f.no_fit) c.kernel.fit = false;
  c.validate();
  return c;
}

int simulate_exit(const SimulateResult& r) { return r.all_ok() ? kOk : kViolation; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-learned dynamics, funnel controller synthesis and closed-loop validation"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Seed for data sampling, hyperparameter restarts and Monte-Carlo trials");
  app.add_option("--out", f.out, "Output directory (overrides [run] out)");
  app.add_option("--trials", f.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--grid", f.grid, "Initial states per axis of the start box")->check(CLI::PositiveNumber);
  app.add_flag("--no-fit", f.no_fit, "Use the configured kernel hyperparameters verbatim");
  app.add_flag("--quiet", f.quiet, "Only report errors");

  auto* learn = app.add_subcommand("learn", "Collect or read data and fit the GP model");
  auto* calibrate = app.add_subcommand("calibrate", "Compute error-bound scales for the learned model");
  auto* synth = app.add_subcommand("synthesize", "Construct the funnel from the start and goal boxes");
  auto* simulate = app.add_subcommand("simulate", "Run the closed loop and audit funnel containment");
  auto* reproduce = app.add_subcommand("reproduce", "Run the whole case study and compare with the published numbers");
  auto* show = app.add_subcommand("config", "Print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  std::ostringstream sink;
  std::ostream& log = f.quiet ? static_cast<std::ostream&>(sink) : std::cout;
  try {
    if (*reproduce) {
      const RunConfig c = build_config(f, case_study_config(f.seed.value_or(RunConfig{}.run.seed)));
      const auto r = cmd_reproduce_case_study(c, log);
      if (!r.simulate.all_ok()) {
        std::cerr << "error: closed-loop runs left the funnel or failed the audit\n";
        return kViolation;
      }
      return kOk;
    }
    const RunConfig c = build_config(f, RunConfig{});
    if (*show) {
      std::cout << serialize_config(c);
    } else if (*learn) {
      cmd_learn(c, log);
    } else if (*calibrate) {
      cmd_calibrate(c, log);
    } else if (*synth) {
      cmd_synthesize(c, log);
    } else if (*simulate) {
      const auto r = cmd_simulate(c, log);
      if (const int code = simulate_exit(r); code != kOk) {
        std::cerr << "error: " << r.report;
        return code;
      }
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify(std::current_exception());
  }
}
