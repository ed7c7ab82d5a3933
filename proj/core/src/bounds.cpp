#include "optstab/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace optstab {

void BoundInputs::validate_common() const {
  if (!(gamma > 0.0) || !(l_max > 0.0) || !(eta > 0.0) ||
      !(theta_sup > 0.0)) {
    throw std::invalid_argument("BoundInputs: gamma, L, eta, theta_sup must be positive");
  }
  if (b < 1 || T < 1 || N < 2) {
    throw std::invalid_argument("BoundInputs: need b >= 1, T >= 1, N >= 2");
  }
  if (b > N) {
    throw std::invalid_argument("BoundInputs: batch size cannot exceed N");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("BoundInputs: delta must lie in (0, 1)");
  }
  if (!(c > 0.0 && c < 1.0)) {
    throw std::invalid_argument("BoundInputs: c must lie in (0, 1)");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("BoundInputs: lambda must be nonnegative");
  }
}

void BoundInputs::validate_schedule() const {
  if (static_cast<long>(alpha_schedule.size()) != T) {
    throw std::invalid_argument(
        "BoundInputs: alpha_schedule length must equal T");
  }
  for (double a : alpha_schedule) {
    if (!(a > 0.0 && a <= 1.0)) {
      throw std::invalid_argument("BoundInputs: alpha_t must lie in (0, 1]");
    }
    if (a * lambda >= 1.0) {
      throw std::invalid_argument("BoundInputs: need alpha_t * lambda < 1");
    }
  }
}

std::pair<double, double> adam_stability_bounds(const BoundInputs& in) {
  in.validate_common();
  if (in.b >= in.N) {
    throw std::invalid_argument("adam_stability_bounds: need k = N/b > 1");
  }
  const double n = static_cast<double>(in.N);
  const double bT = static_cast<double>(in.b) * static_cast<double>(in.T);
  const double beta = (2.0 * in.eta / in.c) * (bT * in.gamma * in.gamma / n);
  const double ratio = static_cast<double>(in.b) * in.gamma / n;
  const double rho = (8.0 * in.eta / in.c) * (ratio * ratio);
  return {beta, rho};
}

double adam_generalization_bound(const BoundInputs& in) {
  in.validate_common();
  if (in.b >= in.N) {
    throw std::invalid_argument("adam_generalization_bound: need k = N/b > 1");
  }
  // The final concentration term uses log(2/delta), matching the combined
  // form and the AdamW analogue; noted in emitted metadata.
  const double n = static_cast<double>(in.N);
  const double t = static_cast<double>(in.T);
  const double log_term = std::log(2.0 / in.delta);
  const double ratio = static_cast<double>(in.b) * in.gamma / n;
  const double first = 4.0 * (ratio * ratio) * std::sqrt(t * log_term);
  const double second = (static_cast<double>(in.b) * t * in.gamma * in.gamma / n) *
                        (1.0 + std::sqrt(2.0 * n * log_term));
  return (2.0 * in.eta / in.c) * (first + second) +
         in.l_max * std::sqrt(log_term / (2.0 * n));
}

namespace {

// sum_t alpha_t (eta gamma^2 / c + gamma lambda theta_sup), shared by
// both AdamW bounds.
double schedule_weight(const BoundInputs& in) {
  const double per_step =
      in.eta * in.gamma * in.gamma / in.c + in.gamma * in.lambda * in.theta_sup;
  double total = 0.0;
  for (double a : in.alpha_schedule) total += a * per_step;
  return total;
}

}  // namespace

std::pair<double, double> adamw_stability_bounds(const BoundInputs& in) {
  in.validate_common();
  in.validate_schedule();
  const double n = static_cast<double>(in.N);
  const double weight = schedule_weight(in);
  const double beta =
      (2.0 * static_cast<double>(in.b) * static_cast<double>(in.T) / n) * weight;
  const double rho = (8.0 * static_cast<double>(in.b) * static_cast<double>(in.b) /
                      (n * n)) *
                     weight;
  return {beta, rho};
}

double adamw_generalization_bound(const BoundInputs& in) {
  in.validate_common();
  in.validate_schedule();
  const double n = static_cast<double>(in.N);
  const double t = static_cast<double>(in.T);
  const double log_term = std::log(2.0 / in.delta);
  const double weight = schedule_weight(in);
  const double paren = (4.0 * static_cast<double>(in.b) / n) *
                           std::sqrt(t * log_term) +
                       t * std::sqrt(2.0 * n * log_term);
  return (2.0 * static_cast<double>(in.b) / n) * weight * paren +
         in.l_max * std::sqrt(log_term / (2.0 * n));
}

double generalization_from_constants(double rho, double beta, double l_max, double T, double N,
                    double delta) {
  if (rho < 0.0 || beta < 0.0 || l_max < 0.0 || !(T >= 1.0) || !(N >= 1.0)) {
    throw std::invalid_argument("generalization_from_constants: inputs must be nonnegative");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("generalization_from_constants: delta must lie in (0, 1)");
  }
  const double log_term = std::log(2.0 / delta);
  return rho * std::sqrt(T * log_term) +
         beta * (1.0 + std::sqrt(2.0 * N * log_term)) +
         l_max * std::sqrt(log_term / (2.0 * N));
}

LossComparison compare_losses(const BoundInputs& in_kl,
                              const BoundInputs& in_gjm,
                              const std::string& bound) {
  const bool same_settings =
      in_kl.eta == in_gjm.eta && in_kl.b == in_gjm.b && in_kl.T == in_gjm.T &&
      in_kl.N == in_gjm.N && in_kl.delta == in_gjm.delta &&
      in_kl.c == in_gjm.c && in_kl.lambda == in_gjm.lambda &&
      in_kl.theta_sup == in_gjm.theta_sup &&
      in_kl.alpha_schedule == in_gjm.alpha_schedule;
  if (!same_settings) {
    throw std::invalid_argument(
        "compare_losses: inputs may differ only in (gamma, L)");
  }
  LossComparison cmp;
  cmp.bound = bound;
  if (bound == "adam") {
    cmp.bound_kl = adam_generalization_bound(in_kl);
    cmp.bound_gjm = adam_generalization_bound(in_gjm);
  } else if (bound == "adamw") {
    cmp.bound_kl = adamw_generalization_bound(in_kl);
    cmp.bound_gjm = adamw_generalization_bound(in_gjm);
  } else {
    throw std::invalid_argument("compare_losses: bound must be adam or adamw");
  }
  cmp.gjm_smaller = cmp.bound_gjm < cmp.bound_kl;
  cmp.factor = cmp.bound_kl / cmp.bound_gjm;
  return cmp;
}

}  // namespace optstab
