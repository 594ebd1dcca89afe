// Batch front end: runs experiment grids, solves single equilibria and
// validates configuration files.  Exit codes: 0 success, 2 configuration
// error, 3 solver error, 4 I/O error.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccmkt/harness.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string mode;
  std::uint64_t seed = 0;
  int runs = 0;
  std::size_t oos = 0;
  std::vector<std::size_t> sizes;
  std::string out_dir;
  long long trace_every = 0;
};

void attach_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "configuration file (JSON)")
      ->required();
  cmd->add_option("--mode", o.mode, "baseline, learning or sharing");
  cmd->add_option("--seed", o.seed, "base seed override");
  cmd->add_option("--runs", o.runs, "repetitions per sample size");
  cmd->add_option("--oos", o.oos, "out-of-sample scenario count");
  cmd->add_option("--sizes", o.sizes, "sample size grid, e.g. 10,100,1000")
      ->delimiter(',');
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--trace-every", o.trace_every,
                  "record every k-th price iterate to a trace file");
}

ccmkt::ExperimentConfig load_with_overrides(const CLI::App* cmd,
                                            const Overrides& o) {
  std::vector<std::string> warnings;
  ccmkt::ExperimentConfig config = ccmkt::load_config(o.config_path, &warnings);
  if (cmd->count("--mode")) config.mode = ccmkt::parse_mode(o.mode);
  if (cmd->count("--seed")) config.base_seed = o.seed;
  if (cmd->count("--runs")) config.runs = o.runs;
  if (cmd->count("--oos")) config.oos_count = o.oos;
  if (cmd->count("--sizes")) config.sample_sizes = o.sizes;
  if (cmd->count("--out")) config.output_dir = o.out_dir;
  if (cmd->count("--trace-every")) config.solver.trace_every = o.trace_every;
  for (const std::string& w : warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const std::string& w : ccmkt::validate_config(config))
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  return config;
}

int cmd_run(const CLI::App* cmd, const Overrides& o) {
  const ccmkt::ExperimentConfig config = load_with_overrides(cmd, o);
  const ccmkt::ExperimentOutput out = ccmkt::run_experiment(config);

  std::printf("mode %s, %zu sample sizes x %d runs, %zu scenarios per row\n",
              ccmkt::to_string(config.mode).c_str(),
              config.sample_sizes.size(), config.runs, config.oos_count);
  std::printf("%-12s %6s %10s %12s %14s %12s\n", "sample_size", "rows",
              "converged", "reliability", "mean_cost", "cvar5");
  for (const ccmkt::AggregateRow& a : out.aggregates)
    std::printf("%-12zu %6d %10d %12.4f %14.6g %12.6g\n", a.sample_size,
                a.rows, a.converged_rows, a.reliability[0], a.mean_cost[0],
                a.cvar5[0]);
  if (out.non_converged > 0)
    std::printf("%d run(s) did not converge and are excluded from the "
                "aggregate statistics\n",
                out.non_converged);
  std::printf("rows:      %s\naggregate: %s\n", out.rows_path.c_str(),
              out.aggregate_path.c_str());
  return 0;
}

int cmd_solve(const CLI::App* cmd, const Overrides& o) {
  const ccmkt::ExperimentConfig config = load_with_overrides(cmd, o);
  const std::size_t size = config.sample_sizes.front();
  const ccmkt::PreparedCell cell = ccmkt::prepare_cell(config, size, 0);
  const ccmkt::EquilibriumResult eq =
      ccmkt::tatonnement(config.market, cell.summaries, config.solver);

  std::printf("mode %s, sample size %zu, run 0\n",
              ccmkt::to_string(config.mode).c_str(), size);
  for (std::size_t i = 0; i < eq.decisions.size(); ++i) {
    std::printf("producer %zu: p = %.6f MW, alpha = %.6f, variance = %.6f, "
                "support [%.6f, %.6f]\n",
                i + 1, eq.decisions[i].p, eq.decisions[i].alpha,
                cell.summaries[i].variance, cell.summaries[i].w_lo,
                cell.summaries[i].w_hi);
    if (i < cell.fits.size())
      std::printf("            fitted shapes (%.6f, %.6f)\n",
                  cell.fits[i].alpha_hat, cell.fits[i].beta_hat);
  }
  std::printf("prices:     energy %.6f, reserve %.6f\n", eq.prices.energy,
              eq.prices.reserve);
  std::printf("residuals:  energy %.3e, reserve %.3e\n", eq.energy_residual,
              eq.reserve_residual);
  std::printf("iterations: %lld, converged: %s\n", eq.iterations,
              eq.converged ? "yes" : "no");
  if (!eq.converged && eq.iterations == 0)
    std::printf("note: estimated supports exceed the fleet's reserve "
                "capability; no balancing allocation is feasible\n");
  return 0;
}

int cmd_validate(const Overrides& o) {
  std::vector<std::string> warnings;
  const ccmkt::ExperimentConfig config =
      ccmkt::load_config(o.config_path, &warnings);
  for (const std::string& w : ccmkt::validate_config(config))
    warnings.push_back(w);
  for (const std::string& w : warnings)
    std::printf("warning: %s\n", w.c_str());
  std::printf("%s: valid (%zu warning(s))\n", o.config_path.c_str(),
              warnings.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chance-constrained market equilibrium experiments"};
  app.require_subcommand(1);

  Overrides o;
  CLI::App* run = app.add_subcommand("run", "run the full experiment grid");
  attach_common(run, o);
  CLI::App* solve =
      app.add_subcommand("solve", "solve one equilibrium and print it");
  attach_common(solve, o);
  CLI::App* validate =
      app.add_subcommand("validate", "check a configuration file");
  validate->add_option("--config", o.config_path, "configuration file (JSON)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run, o);
    if (solve->parsed()) return cmd_solve(solve, o);
    return cmd_validate(o);
  } catch (const ccmkt::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ccmkt::SemanticError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ccmkt::DimensionLimit& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ccmkt::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const ccmkt::Error& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
