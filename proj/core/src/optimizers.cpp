#include "optstab/optimizers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace optstab {

double Schedule::alpha_at(int t) const {
  if (t < 1) {
    throw std::invalid_argument("Schedule: step index must be >= 1");
  }
  if (kind == Kind::Constant) return value;
  // Cosine decay from `value` to `min_value` over `horizon` steps, flat after.
  const int step = std::min(t - 1, horizon);
  const double phase = horizon > 0
                           ? static_cast<double>(step) / horizon
                           : 1.0;
  return min_value +
         (value - min_value) * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

void Schedule::validate() const {
  if (!(value > 0.0 && value <= 1.0)) {
    throw std::invalid_argument("Schedule: value must lie in (0, 1]");
  }
  if (kind == Kind::Cosine) {
    if (min_value < 0.0 || min_value > value) {
      throw std::invalid_argument("Schedule: need 0 <= min_value <= value");
    }
    if (horizon < 1) {
      throw std::invalid_argument("Schedule: cosine horizon must be >= 1");
    }
  }
}

void OptimizerConfig::validate() const {
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("OptimizerConfig: betas must lie in (0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: epsilon must be positive");
  }
  if (!(eta > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: eta must be positive");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("OptimizerConfig: lambda must be nonnegative");
  }
  schedule.validate();
}

OptimizerState OptimizerState::zeros(std::size_t n) {
  OptimizerState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.t = 0;
  return s;
}

OptimizerState update_moments(const OptimizerState& state,
                              const GradVector& g,
                              const OptimizerConfig& cfg) {
  if (state.m.size() != g.size() || state.v.size() != g.size()) {
    throw std::invalid_argument("update_moments: length mismatch");
  }
  OptimizerState out;
  out.t = state.t + 1;
  out.m.resize(g.size());
  out.v.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    out.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * (g[i] * g[i]);
  }
  return out;
}

std::pair<Vec64, Vec64> bias_correct(const OptimizerState& state,
                                     const OptimizerConfig& cfg) {
  if (state.t < 1) {
    throw std::invalid_argument("bias_correct: t must be >= 1");
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, state.t);
  const double c2 = 1.0 - std::pow(cfg.beta2, state.t);
  Vec64 mhat(state.m.size());
  Vec64 vhat(state.v.size());
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    mhat[i] = state.m[i] / c1;
    vhat[i] = state.v[i] / c2;
  }
  return {std::move(mhat), std::move(vhat)};
}

namespace {

// Shared adaptive term eta * mhat / (sqrt(vhat) + eps). Keeping one code
// path makes AdamW with lambda = 0, alpha_t = 1 bitwise equal to Adam.
Vec64 adaptive_term(const Vec64& mhat, const Vec64& vhat,
                    const OptimizerConfig& cfg) {
  Vec64 step(mhat.size());
  for (std::size_t i = 0; i < mhat.size(); ++i) {
    step[i] = cfg.eta * (mhat[i] / (std::sqrt(vhat[i]) + cfg.epsilon));
  }
  return step;
}

void check_adamw_decay(double alpha_t, double lambda) {
  // lambda = 0 switches the decay off and is always admissible; the wrong-
  // direction regime starts at alpha_t * lambda >= 1.
  if (!(alpha_t > 0.0) || lambda < 0.0 || alpha_t * lambda >= 1.0) {
    throw std::invalid_argument(
        "adamw_step: need 0 <= alpha_t * lambda < 1");
  }
}

}  // namespace

StepResult adam_step(const ParamVector& theta, const OptimizerState& state,
                     const GradVector& g, const OptimizerConfig& cfg) {
  if (theta.size() != g.size()) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  StepResult out;
  out.state = update_moments(state, g, cfg);
  const auto [mhat, vhat] = bias_correct(out.state, cfg);
  const Vec64 step = adaptive_term(mhat, vhat, cfg);
  out.theta.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.theta[i] = theta[i] - step[i];
  }
  return out;
}

StepResult adamw_step(const ParamVector& theta, const OptimizerState& state,
                      const GradVector& g, const OptimizerConfig& cfg,
                      int t_for_schedule) {
  if (theta.size() != g.size()) {
    throw std::invalid_argument("adamw_step: length mismatch");
  }
  const double alpha_t = cfg.schedule.alpha_at(t_for_schedule);
  check_adamw_decay(alpha_t, cfg.lambda);
  StepResult out;
  out.state = update_moments(state, g, cfg);
  const auto [mhat, vhat] = bias_correct(out.state, cfg);
  const Vec64 step = adaptive_term(mhat, vhat, cfg);
  out.theta.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.theta[i] = theta[i] - alpha_t * (step[i] + cfg.lambda * theta[i]);
  }
  return out;
}

ParamVector sgd_l2_step(const ParamVector& theta, const GradVector& grad_sum,
                        int batch_size, const OptimizerConfig& cfg) {
  if (theta.size() != grad_sum.size()) {
    throw std::invalid_argument("sgd_l2_step: length mismatch");
  }
  if (batch_size < 1) {
    throw std::invalid_argument("sgd_l2_step: batch size must be >= 1");
  }
  const double b = static_cast<double>(batch_size);
  const double shrink = 1.0 - cfg.eta * cfg.lambda / b;
  ParamVector out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out[i] = shrink * theta[i] - (cfg.eta / b) * grad_sum[i];
  }
  return out;
}

const char* rule_name(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::Adam: return "adam";
    case UpdateRule::AdamW: return "adamw";
    case UpdateRule::SgdL2: return "sgd";
  }
  return "?";
}

UpdateRule rule_from_name(const std::string& name) {
  if (name == "adam") return UpdateRule::Adam;
  if (name == "adamw") return UpdateRule::AdamW;
  if (name == "sgd") return UpdateRule::SgdL2;
  throw std::invalid_argument("unknown optimizer rule: " + name);
}

StepResult apply_rule(UpdateRule rule, const ParamVector& theta,
                      const OptimizerState& state, const GradVector& g,
                      const OptimizerConfig& cfg, int t_for_schedule,
                      int batch_size) {
  switch (rule) {
    case UpdateRule::Adam:
      return adam_step(theta, state, g, cfg);
    case UpdateRule::AdamW:
      return adamw_step(theta, state, g, cfg, t_for_schedule);
    case UpdateRule::SgdL2: {
      // g is the batch mean; the sum form divides by b again.
      GradVector sum = g;
      for (double& x : sum) x *= static_cast<double>(batch_size);
      StepResult out;
      out.theta = sgd_l2_step(theta, sum, batch_size, cfg);
      out.state = state;
      out.state.t += 1;
      return out;
    }
  }
  throw std::logic_error("apply_rule: unreachable");
}

double sigma_bound_probe(UpdateRule rule, std::span<const ParamVector> thetas,
                         std::span<const GradVector> grads,
                         const OptimizerState& shared_state,
                         const OptimizerConfig& cfg, int t_for_schedule,
                         int batch_size) {
  if (thetas.empty() || thetas.size() != grads.size()) {
    throw std::invalid_argument(
        "sigma_bound_probe: need matching non-empty probe sets");
  }
  double best = 0.0;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const StepResult r = apply_rule(rule, thetas[i], shared_state, grads[i],
                                    cfg, t_for_schedule, batch_size);
    best = std::max(best, param_distance(thetas[i], r.theta));
  }
  return best;
}

double expansiveness_probe(
    UpdateRule rule,
    std::span<const std::pair<ParamVector, ParamVector>> pairs,
    const GradFn& grad_fn, const OptimizerState& shared_state,
    const OptimizerConfig& cfg, int t_for_schedule, int batch_size) {
  if (pairs.empty()) {
    throw std::invalid_argument("expansiveness_probe: no probe pairs");
  }
  double best = 0.0;
  for (const auto& [a, b] : pairs) {
    const double dist = param_distance(a, b);
    if (dist == 0.0) continue;  // coincident pair carries no ratio
    const StepResult ra =
        apply_rule(rule, a, shared_state, grad_fn(a), cfg, t_for_schedule,
                   batch_size);
    const StepResult rb =
        apply_rule(rule, b, shared_state, grad_fn(b), cfg, t_for_schedule,
                   batch_size);
    best = std::max(best, param_distance(ra.theta, rb.theta) / dist);
  }
  return best;
}

}  // namespace optstab
