#pragma once

#include <span>
#include <utility>

#include "optstab/data.hpp"
#include "optstab/rng.hpp"

namespace optstab {

struct ModelSpec;  // models.hpp

/// Loss selector. KL carries the left-domain clamp applied to predicted
/// probabilities; GJM carries its exponent alpha in (0, 1].
struct LossSpec {
  enum class Kind { Kl, Gjm };

  Kind kind = Kind::Kl;
  double clamp_min = 1e-10;
  double alpha = 0.5;

  static LossSpec kl(double clamp_min = 1e-10);
  static LossSpec gjm(double alpha = 0.5);
  void validate() const;
  const char* name() const;  // "kl" / "gjm"
};

/// sum_m y_m log(y_m / max(yhat_m, clamp_min)).
double kl_loss(const LabelDistribution& yhat, const LabelDistribution& y,
               double clamp_min);

/// d kl / d yhat: -y_m/yhat_m where yhat_m > clamp_min, 0 where clamped.
Vec64 kl_grad(const LabelDistribution& yhat, const LabelDistribution& y,
              double clamp_min);

/// sum_m y_m |1 - (yhat_m/y_m)^alpha|^(1/alpha).
double gjm_loss(const LabelDistribution& yhat, const LabelDistribution& y,
                double alpha);

/// Analytic gradient of gjm_loss in yhat; every yhat_m must be positive.
/// At alpha = 0.5 coordinate m reduces to 1 - sqrt(y_m / yhat_m).
Vec64 gjm_grad(const LabelDistribution& yhat, const LabelDistribution& y,
               double alpha);

double loss_value(const LossSpec& spec, const LabelDistribution& yhat,
                  const LabelDistribution& y);
Vec64 loss_grad_yhat(const LossSpec& spec, const LabelDistribution& yhat,
                     const LabelDistribution& y);

/// Mean pointwise loss of the model over a non-empty batch.
double batch_loss(const ModelSpec& model, const Vec64& theta,
                  std::span<const Sample> batch, const LossSpec& spec);

/// (1/b) (sum_i loss_i + (lambda/2) ||theta||^2).
double regularized_batch_loss(const ModelSpec& model, const Vec64& theta,
                              std::span<const Sample> batch,
                              const LossSpec& spec, double lambda);

/// Empirical profile of a loss over the softmax image of a bounded logit
/// box: estimated Lipschitz constant and maximum value, with the domain
/// parameters that produced them.
struct LossProfile {
  double gamma_hat = 0.0;
  double l_hat = 0.0;
  double logit_bound = 0.0;
  int num_classes = 0;
  long n_samples = 0;
};

using SimplexPair = std::pair<LabelDistribution, LabelDistribution>;

/// One random (yhat, y) pair from the estimation domain. Draws mix
/// uniform-interior logits with box-vertex logits so that the boundary
/// suprema of the losses are actually reachable by sampling.
SimplexPair sample_simplex_pair(int m_classes, double logit_bound,
                                RngStream& rng);

double max_grad_norm_over_pairs(const LossSpec& spec,
                                std::span<const SimplexPair> pairs);
double max_loss_over_pairs(const LossSpec& spec,
                           std::span<const SimplexPair> pairs);

/// Running max of ||grad|| over n_samples domain draws. For a fixed stream
/// prefix the estimate is nondecreasing in n_samples.
double estimate_lipschitz(const LossSpec& spec, int m_classes,
                          double logit_bound, long n_samples, RngStream& rng);

/// Running max of the loss value over n_samples domain draws.
double estimate_max_value(const LossSpec& spec, int m_classes,
                          double logit_bound, long n_samples, RngStream& rng);

/// Both estimates over one shared draw sequence.
LossProfile profile_loss(const LossSpec& spec, int m_classes,
                         double logit_bound, long n_samples, RngStream& rng);

}  // namespace optstab
