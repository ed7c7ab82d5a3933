#pragma once

#include <functional>
#include <span>
#include <utility>

#include "optstab/models.hpp"

namespace optstab {

/// Per-step multiplier alpha_t in (0, 1].
struct Schedule {
  enum class Kind { Constant, Cosine };

  Kind kind = Kind::Constant;
  double value = 1.0;      // constant level / cosine start
  double min_value = 0.0;  // cosine floor
  int horizon = 1;         // cosine decay length in steps

  double alpha_at(int t) const;  // t >= 1
  void validate() const;
};

struct OptimizerConfig {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lambda = 0.1;  // weight decay (AdamW / coupled-L2 SGD)
  Schedule schedule;

  void validate() const;
};

/// First/second moment estimates and the step counter; all zero initially.
struct OptimizerState {
  Vec64 m;
  Vec64 v;
  int t = 0;

  static OptimizerState zeros(std::size_t n);
};

/// m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2 (elementwise), t <- t+1.
OptimizerState update_moments(const OptimizerState& state,
                              const GradVector& g,
                              const OptimizerConfig& cfg);

/// (m / (1 - b1^t), v / (1 - b2^t)). Usage error when t = 0.
std::pair<Vec64, Vec64> bias_correct(const OptimizerState& state,
                                     const OptimizerConfig& cfg);

struct StepResult {
  ParamVector theta;
  OptimizerState state;
};

/// theta <- theta - eta * mhat / (sqrt(vhat) + epsilon).
StepResult adam_step(const ParamVector& theta, const OptimizerState& state,
                     const GradVector& g, const OptimizerConfig& cfg);

/// theta <- theta - alpha_t (eta * mhat / (sqrt(vhat) + epsilon) + lambda theta).
/// Requires 0 <= alpha_t * lambda < 1.
StepResult adamw_step(const ParamVector& theta, const OptimizerState& state,
                      const GradVector& g, const OptimizerConfig& cfg,
                      int t_for_schedule);

/// theta <- (1 - eta lambda / b) theta - (eta / b) grad_sum.
ParamVector sgd_l2_step(const ParamVector& theta, const GradVector& grad_sum,
                        int batch_size, const OptimizerConfig& cfg);

enum class UpdateRule { Adam, AdamW, SgdL2 };

const char* rule_name(UpdateRule rule);
UpdateRule rule_from_name(const std::string& name);

/// One update of `rule` from (theta, state) with the batch-mean gradient g.
/// SgdL2 rescales internally to the grad-sum form and leaves moments unused.
StepResult apply_rule(UpdateRule rule, const ParamVector& theta,
                      const OptimizerState& state, const GradVector& g,
                      const OptimizerConfig& cfg, int t_for_schedule,
                      int batch_size = 1);

using GradFn = std::function<GradVector(const ParamVector&)>;

/// Max single-step displacement ||theta - A(theta)|| over the probe set;
/// an empirical lower bound on the rule's sigma.
double sigma_bound_probe(UpdateRule rule, std::span<const ParamVector> thetas,
                         std::span<const GradVector> grads,
                         const OptimizerState& shared_state,
                         const OptimizerConfig& cfg, int t_for_schedule,
                         int batch_size = 1);

/// Max ratio ||A(theta) - A(theta')|| / ||theta - theta'|| over probe pairs,
/// with gradients supplied by grad_fn and the moment state shared.
/// Coincident pairs are skipped; returns 0 if every pair coincides.
double expansiveness_probe(
    UpdateRule rule,
    std::span<const std::pair<ParamVector, ParamVector>> pairs,
    const GradFn& grad_fn, const OptimizerState& shared_state,
    const OptimizerConfig& cfg, int t_for_schedule, int batch_size = 1);

}  // namespace optstab
