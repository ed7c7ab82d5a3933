#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "optstab/bounds.hpp"
#include "optstab/losses.hpp"
#include "optstab/models.hpp"
#include "optstab/optimizers.hpp"

namespace optstab {

/// Configuration problem (parse error, unknown key, invalid value).
/// `line` is 1-based; 0 when the problem is not tied to a source line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class ExperimentKind { Gradcheck, Stability, Bdc, Bounds, Sweep, Genplot };

const char* kind_name(ExperimentKind kind);

struct DataBlock {
  long n = 600;
  int d = 8;
  int m = 10;
  double sigma = 2.0;
  double label_noise = 0.1;
  std::uint64_t seed = 1;
  long val_n = 0;   // 0: n/2
  long test_n = 0;  // 0: n/2
};

struct ModelBlock {
  ModelSpec::Arch arch = ModelSpec::Arch::LinearSoftmax;
  int hidden = 16;
};

struct OptimizerBlock {
  UpdateRule rule = UpdateRule::Adam;
  OptimizerConfig cfg;
  /// Optional GJM-specific learning rate for two-loss curve runs; 0 shares
  /// cfg.eta. Using it makes the loss comparison rate-confounded, which the
  /// emitted summary flags.
  double eta_gjm = 0.0;
};

struct RunBlock {
  long T = 100;
  int b = 0;          // 0: derive from k
  int k = 0;          // 0: derive from b
  int epochs = 20;    // genplot
  int n_seeds = 10;
  int probe_size = 512;
  double delta = 0.05;
  int cs_threshold = 5;
};

struct StabilityBlock {
  int neighbor_batch = 0;  // 1-based; 0 = random per seed
};

struct SweepBlock {
  std::string field;           // dotted numeric key, e.g. "run.T"
  std::vector<double> values;  // one sub-run per value
};

struct BoundsBlock {
  BoundInputs inputs;
  /// adam_stability | adam_gen | adamw_stability | adamw_gen | combined | all
  std::string bound = "adam_stability";
  Schedule schedule;    // expands to alpha_schedule when empty
  double rho_in = 0.0;  // measured constants for bound = combined
  double beta_in = 0.0;
  bool compare = false;  // also evaluate a second (gamma, L) profile
  double gamma_gjm = 0.0;
  double l_gjm = 0.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Stability;
  DataBlock data;
  ModelBlock model;
  OptimizerBlock optimizer;
  std::vector<LossSpec> losses;
  RunBlock run;
  StabilityBlock stability;
  SweepBlock sweep;
  BoundsBlock bounds;

  /// Derived partition shape; validates the b/k/N consistency rules.
  int resolved_k() const;
  int resolved_b() const;
  long resolved_val_n() const;
  long resolved_test_n() const;

  void validate() const;

  /// Canonical text form: parse(serialize(c)) == c and
  /// serialize(parse(s)) is a fixed point for any valid s.
  std::string serialize() const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig parse_file(const std::filesystem::path& path);
};

}  // namespace optstab
