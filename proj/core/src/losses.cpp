#include "optstab/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "optstab/models.hpp"

namespace optstab {

LossSpec LossSpec::kl(double clamp_min) {
  LossSpec s;
  s.kind = Kind::Kl;
  s.clamp_min = clamp_min;
  s.validate();
  return s;
}

LossSpec LossSpec::gjm(double alpha) {
  LossSpec s;
  s.kind = Kind::Gjm;
  s.alpha = alpha;
  s.validate();
  return s;
}

void LossSpec::validate() const {
  if (kind == Kind::Kl && !(clamp_min > 0.0)) {
    throw std::invalid_argument("LossSpec: KL clamp_min must be positive");
  }
  if (kind == Kind::Gjm && !(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("LossSpec: GJM alpha must lie in (0, 1]");
  }
}

const char* LossSpec::name() const {
  return kind == Kind::Kl ? "kl" : "gjm";
}

namespace {

void require_same_dim(const LabelDistribution& yhat,
                      const LabelDistribution& y, const char* what) {
  if (yhat.size() != y.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

double sign_of(double s) { return (s > 0.0) - (s < 0.0); }

}  // namespace

double kl_loss(const LabelDistribution& yhat, const LabelDistribution& y,
               double clamp_min) {
  require_same_dim(yhat, y, "kl_loss");
  if (!(clamp_min > 0.0)) {
    throw std::invalid_argument("kl_loss: clamp_min must be positive");
  }
  double sum = 0.0;
  for (int m = 0; m < y.size(); ++m) {
    const double q = std::max(yhat.probs[m], clamp_min);
    sum += y.probs[m] * std::log(y.probs[m] / q);
  }
  return sum;
}

Vec64 kl_grad(const LabelDistribution& yhat, const LabelDistribution& y,
              double clamp_min) {
  require_same_dim(yhat, y, "kl_grad");
  if (!(clamp_min > 0.0)) {
    throw std::invalid_argument("kl_grad: clamp_min must be positive");
  }
  Vec64 g(y.size());
  for (int m = 0; m < y.size(); ++m) {
    // Flat extension below the clamp: the loss no longer depends on yhat_m.
    g[m] = yhat.probs[m] > clamp_min ? -y.probs[m] / yhat.probs[m] : 0.0;
  }
  return g;
}

double gjm_loss(const LabelDistribution& yhat, const LabelDistribution& y,
                double alpha) {
  require_same_dim(yhat, y, "gjm_loss");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("gjm_loss: alpha must lie in (0, 1]");
  }
  double sum = 0.0;
  for (int m = 0; m < y.size(); ++m) {
    if (!(y.probs[m] > 0.0)) {
      throw std::invalid_argument("gjm_loss: target entries must be positive");
    }
    const double u = std::pow(yhat.probs[m] / y.probs[m], alpha);
    sum += y.probs[m] * std::pow(std::abs(1.0 - u), 1.0 / alpha);
  }
  return sum;
}

Vec64 gjm_grad(const LabelDistribution& yhat, const LabelDistribution& y,
               double alpha) {
  require_same_dim(yhat, y, "gjm_grad");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("gjm_grad: alpha must lie in (0, 1]");
  }
  Vec64 g(y.size());
  for (int m = 0; m < y.size(); ++m) {
    const double ym = y.probs[m];
    const double qm = yhat.probs[m];
    if (!(ym > 0.0)) {
      throw std::invalid_argument("gjm_grad: target entries must be positive");
    }
    if (!(qm > 0.0)) {
      throw std::domain_error("gjm_grad: predicted entry is zero");
    }
    const double u = std::pow(qm / ym, alpha);
    const double s = 1.0 - u;
    // d/dq [ y |1-(q/y)^a|^(1/a) ]
    //   = -sign(s) |s|^(1/a - 1) y^(1-a) q^(a-1).
    g[m] = -sign_of(s) * std::pow(std::abs(s), 1.0 / alpha - 1.0) *
           std::pow(ym, 1.0 - alpha) * std::pow(qm, alpha - 1.0);
  }
  return g;
}

double loss_value(const LossSpec& spec, const LabelDistribution& yhat,
                  const LabelDistribution& y) {
  return spec.kind == LossSpec::Kind::Kl
             ? kl_loss(yhat, y, spec.clamp_min)
             : gjm_loss(yhat, y, spec.alpha);
}

Vec64 loss_grad_yhat(const LossSpec& spec, const LabelDistribution& yhat,
                     const LabelDistribution& y) {
  return spec.kind == LossSpec::Kind::Kl
             ? kl_grad(yhat, y, spec.clamp_min)
             : gjm_grad(yhat, y, spec.alpha);
}

double batch_loss(const ModelSpec& model, const Vec64& theta,
                  std::span<const Sample> batch, const LossSpec& spec) {
  if (batch.empty()) {
    throw std::invalid_argument("batch_loss: empty batch");
  }
  double sum = 0.0;
  for (const Sample& s : batch) {
    sum += loss_value(spec, forward(model, theta, s.x), s.y);
  }
  return sum / static_cast<double>(batch.size());
}

double regularized_batch_loss(const ModelSpec& model, const Vec64& theta,
                              std::span<const Sample> batch,
                              const LossSpec& spec, double lambda) {
  if (lambda < 0.0) {
    throw std::invalid_argument(
        "regularized_batch_loss: lambda must be nonnegative");
  }
  if (batch.empty()) {
    throw std::invalid_argument("regularized_batch_loss: empty batch");
  }
  double sum = 0.0;
  for (const Sample& s : batch) {
    sum += loss_value(spec, forward(model, theta, s.x), s.y);
  }
  const double nrm = l2_norm(theta);
  return (sum + 0.5 * lambda * nrm * nrm) /
         static_cast<double>(batch.size());
}

SimplexPair sample_simplex_pair(int m_classes, double logit_bound,
                                RngStream& rng) {
  if (m_classes < 2) {
    throw std::invalid_argument("sample_simplex_pair: need M >= 2");
  }
  if (!(logit_bound > 0.0)) {
    throw std::invalid_argument(
        "sample_simplex_pair: logit_bound must be positive");
  }
  auto draw = [&]() {
    Vec64 logits(m_classes);
    if (rng.uniform01() < 0.5) {
      for (double& z : logits) z = rng.uniform(-logit_bound, logit_bound);
    } else {
      // Box vertex: the loss suprema sit at extreme probability ratios.
      for (double& z : logits) {
        z = rng.uniform01() < 0.5 ? -logit_bound : logit_bound;
      }
    }
    return LabelDistribution{softmax(logits)};
  };
  LabelDistribution yhat = draw();
  LabelDistribution y = draw();
  return {std::move(yhat), std::move(y)};
}

double max_grad_norm_over_pairs(const LossSpec& spec,
                                std::span<const SimplexPair> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("max_grad_norm_over_pairs: no pairs");
  }
  double best = 0.0;
  for (const auto& [yhat, y] : pairs) {
    const Vec64 g = loss_grad_yhat(spec, yhat, y);
    best = std::max(best, l2_norm(g));
  }
  return best;
}

double max_loss_over_pairs(const LossSpec& spec,
                           std::span<const SimplexPair> pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("max_loss_over_pairs: no pairs");
  }
  double best = 0.0;
  for (const auto& [yhat, y] : pairs) {
    best = std::max(best, loss_value(spec, yhat, y));
  }
  return best;
}

double estimate_lipschitz(const LossSpec& spec, int m_classes,
                          double logit_bound, long n_samples,
                          RngStream& rng) {
  if (n_samples < 1) {
    throw std::invalid_argument("estimate_lipschitz: need n_samples >= 1");
  }
  double best = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const SimplexPair pair = sample_simplex_pair(m_classes, logit_bound, rng);
    best = std::max(best, l2_norm(loss_grad_yhat(spec, pair.first,
                                                 pair.second)));
  }
  return best;
}

double estimate_max_value(const LossSpec& spec, int m_classes,
                          double logit_bound, long n_samples,
                          RngStream& rng) {
  if (n_samples < 1) {
    throw std::invalid_argument("estimate_max_value: need n_samples >= 1");
  }
  double best = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    const SimplexPair pair = sample_simplex_pair(m_classes, logit_bound, rng);
    best = std::max(best, loss_value(spec, pair.first, pair.second));
  }
  return best;
}

LossProfile profile_loss(const LossSpec& spec, int m_classes,
                         double logit_bound, long n_samples, RngStream& rng) {
  if (n_samples < 1) {
    throw std::invalid_argument("profile_loss: need n_samples >= 1");
  }
  LossProfile profile;
  profile.logit_bound = logit_bound;
  profile.num_classes = m_classes;
  profile.n_samples = n_samples;
  for (long i = 0; i < n_samples; ++i) {
    const SimplexPair pair = sample_simplex_pair(m_classes, logit_bound, rng);
    profile.gamma_hat =
        std::max(profile.gamma_hat,
                 l2_norm(loss_grad_yhat(spec, pair.first, pair.second)));
    profile.l_hat =
        std::max(profile.l_hat, loss_value(spec, pair.first, pair.second));
  }
  return profile;
}

}  // namespace optstab
