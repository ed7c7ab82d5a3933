#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "optstab/config.hpp"
#include "optstab/stability.hpp"

namespace optstab {

/// Key/value results of one experiment, in emission order.
struct ExperimentResult {
  std::vector<std::pair<std::string, std::string>> summary;
  /// Per-seed beta estimates where applicable (consumed by sweeps).
  std::vector<double> per_seed_beta;
  double beta = 0.0;
  double rho = 0.0;

  std::string lookup(const std::string& key) const;  // "" when absent
};

/// Executes the configured experiment and writes its result files
/// (CSV + summary.txt + config_echo.cfg) under out_dir. File contents are
/// byte-deterministic functions of the config alone.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir,
                                int threads = 1, bool verbose = false);

/// Sweep driver: one sub-run per swept value under out_dir/point_<i>,
/// aggregated CSV (swept value first column) and a Spearman statistic of
/// the per-seed beta estimates against the swept value.
ExperimentResult run_sweep(const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir,
                           int threads = 1, bool verbose = false);

/// Reads curves_<loss>.csv series from results_dir, validates equal epoch
/// grids, re-emits them as series_<loss>.csv with the generalization-gap
/// column recomputed, and renders chart.svg of the median gap per epoch.
/// Throws std::runtime_error when the series are missing.
void genplot_emit(const std::filesystem::path& results_dir,
                  const std::filesystem::path& out_dir);

/// Aligned-text rendering of a bounds run (the CLI `bounds` output).
std::string render_bounds_text(const ExperimentResult& result);

}  // namespace optstab
