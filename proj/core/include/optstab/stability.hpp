#pragma once

#include <functional>
#include <span>
#include <vector>

#include "optstab/optimizers.hpp"

namespace optstab {

/// One reproducible training: everything needed to replay it exactly.
struct TrainRun {
  ModelSpec model;
  Dataset dataset;
  Partition parts;
  BatchSequence seq;
  UpdateRule rule = UpdateRule::Adam;
  OptimizerConfig opt;
  LossSpec loss;
  bool record_trajectory = false;
};

struct StepObservation {
  int t = 0;          // 1-based step
  double grad_norm = 0.0;
  double mhat_norm = 0.0;  // NaN for SgdL2
  double step_norm = 0.0;  // ||theta_t - theta_{t-1}||
};
using StepObserver = std::function<void(const StepObservation&)>;

struct TrainResult {
  ParamVector theta;
  /// theta_0, theta_stride, theta_2*stride, ..., theta_T when recording.
  std::vector<ParamVector> trajectory;
  int snapshot_stride = 1;
  double max_param_norm = 0.0;  // over all visited parameter vectors
};

/// Runs T = |R| optimizer steps, one batch per step. Bit-deterministic
/// given the run. Trajectory snapshots keep every step for T <= 1000,
/// otherwise every ceil(T/1000) steps (plus the final step).
TrainResult train(const TrainRun& run, const StepObserver& observer = {});

struct TwinStep {
  int t = 0;
  double delta = 0.0;            // ||theta_t - theta'_t||
  double sigma_hat = 0.0;        // max step displacement of the two runs
  double tau_hat = 0.0;          // delta_t / delta_{t-1} on equal-rule steps
  bool rules_equal = false;      // selected batches referenced equal samples
  double loss_diff_max = 0.0;    // max probe |loss diff|; NaN if not probed
};

struct TwinResult {
  std::vector<TwinStep> steps;  // t = 1..T
  ParamVector theta_a;
  ParamVector theta_b;
  double max_param_norm = 0.0;
};

/// Lockstep twin training. The runs must share model, optimizer, loss and T,
/// and must differ only as a neighbor pair (same R, partitions differing in
/// at most one batch) or a resampled pair (same data, different R).
/// Pass a probe set with probe_every_step to fill loss_diff_max per step.
TwinResult twin_train(const TrainRun& a, const TrainRun& b,
                      std::span<const Sample> probe_set = {},
                      bool probe_every_step = false);

/// Everything a beta/rho estimation shares across seeds. Per-seed batch
/// sequences and neighbor draws come from labeled substreams of `seed`.
struct TwinTemplate {
  ModelSpec model;
  Dataset dataset;
  Partition parts;
  UpdateRule rule = UpdateRule::Adam;
  OptimizerConfig opt;
  LossSpec loss;
  int T = 1;
  std::uint64_t seed = 0;
  int neighbor_batch = 0;  // 1-based; 0 draws one per seed
};

struct StabilityEstimate {
  double value = 0.0;              // beta_hat or rho_hat
  std::vector<double> per_seed_max;  // per-seed sup over probe samples
  int n_seeds = 0;
  int probe_size = 0;
};

/// Uniform-stability estimate: per seed a fresh R and a neighbor partition
/// are twin-trained; per-sample |loss difference| is averaged over seeds
/// and beta_hat is the max over the probe set.
StabilityEstimate beta_hat(const TwinTemplate& tmpl, int n_seeds,
                           std::span<const Sample> probe_set,
                           int threads = 1);

/// Bounded-difference estimate: same data, R vs swap_two(R, i, j) with i in
/// the first half and j in the second; per-seed max |loss difference| over
/// the probe set, averaged over seeds.
StabilityEstimate rho_hat(const TwinTemplate& tmpl, int n_seeds,
                          std::span<const Sample> probe_set, int threads = 1);

/// (1/N) sum over the dataset of the pointwise loss.
double empirical_risk(const ModelSpec& spec, const ParamVector& theta,
                      const Dataset& ds, const LossSpec& loss);

/// |R_train - R_val|.
double gen_error_estimate(const ModelSpec& spec, const ParamVector& theta,
                          const Dataset& train_set, const Dataset& val_set,
                          const LossSpec& loss);

struct MaeCs {
  double mae = 0.0;
  double cs_percent = 0.0;
};

/// Argmax-label MAE and cumulative score (|error| < threshold, percent).
/// Argmax ties break toward the smaller class index.
MaeCs mae_cs(const ModelSpec& spec, const ParamVector& theta,
             const Dataset& test_set, int threshold);

}  // namespace optstab
