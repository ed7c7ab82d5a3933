// optstab: configuration-driven optimizer-stability experiments.
//
// Subcommands:
//   run      execute the experiment named in the config file
//   sweep    run one sub-experiment per swept value and aggregate
//   bounds   evaluate the closed-form stability/generalization bounds
//   genplot  turn emitted training curves into plot series and a chart
//
// Exit codes: 0 success, 2 configuration error, 1 runtime failure.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "optstab/experiments.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "results";
  int threads = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config) {
  auto* cfg = cmd->add_option("--config", opts.config_path,
                              "experiment configuration file");
  if (needs_config) cfg->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--threads", opts.threads, "worker threads for seeds");
  cmd->add_flag("--verbose", opts.verbose, "progress notes on stderr");
}

int run_with_config(const CommonOpts& opts, const char* expected_kind) {
  optstab::ExperimentConfig cfg;
  try {
    cfg = optstab::ExperimentConfig::parse_file(opts.config_path);
    if (expected_kind && std::string(kind_name(cfg.kind)) != expected_kind) {
      std::cerr << "config error: " << opts.config_path
                << ": experiment.kind must be " << expected_kind
                << " for this subcommand\n";
      return kExitConfig;
    }
  } catch (const optstab::ConfigError& e) {
    std::cerr << "config error: " << opts.config_path << ": " << e.what()
              << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    // Anything that prevents loading the config is a configuration problem.
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const optstab::ExperimentResult result = optstab::run_experiment(
        cfg, opts.out_dir, opts.threads, opts.verbose);
    if (cfg.kind == optstab::ExperimentKind::Bounds) {
      std::cout << optstab::render_bounds_text(result);
    }
    if (opts.verbose) {
      std::cerr << "[optstab] results written to " << opts.out_dir << "\n";
    }
    return 0;
  } catch (const optstab::ConfigError& e) {
    std::cerr << "config error: " << opts.config_path << ": " << e.what()
              << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimizer stability laboratory"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "run a configured experiment");
  add_common(run_cmd, run_opts, true);

  CommonOpts sweep_opts;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a one-field parameter sweep");
  add_common(sweep_cmd, sweep_opts, true);

  CommonOpts bounds_opts;
  CLI::App* bounds_cmd =
      app.add_subcommand("bounds", "evaluate the closed-form bounds");
  add_common(bounds_cmd, bounds_opts, true);

  CommonOpts genplot_opts;
  std::string results_dir;
  CLI::App* genplot_cmd =
      app.add_subcommand("genplot", "emit plot series from training curves");
  genplot_cmd->add_option("results", results_dir, "directory with curves_*.csv")
      ->required();
  genplot_cmd->add_option("--out", genplot_opts.out_dir,
                          "output directory (defaults to the results dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (run_cmd->parsed()) return run_with_config(run_opts, nullptr);
  if (sweep_cmd->parsed()) return run_with_config(sweep_opts, "sweep");
  if (bounds_cmd->parsed()) return run_with_config(bounds_opts, "bounds");
  if (genplot_cmd->parsed()) {
    try {
      const std::string out = genplot_cmd->count("--out")
                                  ? genplot_opts.out_dir
                                  : results_dir;
      optstab::genplot_emit(results_dir, out);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitConfig;
}
