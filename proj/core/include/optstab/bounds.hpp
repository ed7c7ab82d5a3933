#pragma once

#include <string>
#include <utility>

#include "optstab/vec.hpp"

namespace optstab {

/// Inputs to the closed-form stability and generalization bounds.
/// `c` is the denominator constant in (0,1) (the optimizer epsilon by
/// convention); alpha_schedule must have length T for the AdamW bounds.
struct BoundInputs {
  double gamma = 1.0;    // loss Lipschitz constant
  double l_max = 1.0;    // loss maximum value
  double eta = 1e-3;     // learning rate
  long b = 1;            // batch size
  long T = 1;            // iterations
  long N = 2;            // training-set size
  double delta = 0.05;   // confidence level in (0,1)
  double c = 1e-8;
  double lambda = 0.0;   // weight decay
  Vec64 alpha_schedule;  // alpha_1..alpha_T
  double theta_sup = 1.0;

  void validate_common() const;
  void validate_schedule() const;
};

struct BoundReport {
  double beta_bound = 0.0;
  double rho_bound = 0.0;
  double gen_error_bound = 0.0;
  std::string bound;  // which calculator produced it
};

/// Adam stability constants:
///   beta <= (2 eta / c)(b T gamma^2 / N),
///   rho  <= (8 eta / c)(b gamma / N)^2.
std::pair<double, double> adam_stability_bounds(const BoundInputs& in);

/// Adam generalization-error bound:
///   (2 eta/c)(4 (b gamma/N)^2 sqrt(T log(2/d))
///             + (b T gamma^2/N)(1 + sqrt(2 N log(2/d))))
///   + L sqrt(log(2/d) / (2N)).
double adam_generalization_bound(const BoundInputs& in);

/// AdamW stability constants:
///   beta <= (2 b T / N) sum_t alpha_t (eta gamma^2 / c + gamma lambda theta_sup),
///   rho  <= (8 b^2 / N^2) sum_t alpha_t (eta gamma^2 / c + gamma lambda theta_sup).
std::pair<double, double> adamw_stability_bounds(const BoundInputs& in);

/// AdamW generalization-error bound:
///   (2b/N) sum_t alpha_t (eta gamma^2/c + gamma lambda theta_sup)
///     * (4b/N sqrt(T log(2/d)) + T sqrt(2 N log(2/d)))
///   + L sqrt(log(2/d)/(2N)).
double adamw_generalization_bound(const BoundInputs& in);

/// Optimizer-agnostic combiner over stability constants:
///   rho sqrt(T log(2/d)) + beta (1 + sqrt(2 N log(2/d)))
///   + L sqrt(log(2/d)/(2N)).
/// Accepts measured beta/rho estimates as well as calculator outputs.
double generalization_from_constants(double rho, double beta, double l_max,
                                     double T, double N, double delta);

struct LossComparison {
  double bound_kl = 0.0;
  double bound_gjm = 0.0;
  bool gjm_smaller = false;
  double factor = 0.0;  // bound_kl / bound_gjm
  std::string bound;
};

/// Evaluates the Adam or AdamW generalization bound ("adam" / "adamw") for
/// two profiles that differ only in (gamma, L) and reports which is smaller
/// and by what factor.
LossComparison compare_losses(const BoundInputs& in_kl,
                              const BoundInputs& in_gjm,
                              const std::string& bound);

}  // namespace optstab
