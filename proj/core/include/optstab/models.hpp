#pragma once

#include <cstdint>
#include <span>

#include "optstab/data.hpp"
#include "optstab/losses.hpp"

namespace optstab {

/// Flattened model parameters. Layout is frozen per architecture:
///   linear-softmax: W (M x d, row-major), then bias (M)
///   mlp:            W1 (h x d), b1 (h), W2 (M x h), b2 (M); tanh hidden
using ParamVector = Vec64;
using GradVector = Vec64;

struct ModelSpec {
  enum class Arch { LinearSoftmax, Mlp };

  Arch arch = Arch::LinearSoftmax;
  int feature_dim = 1;
  int hidden = 0;  // MLP only
  int num_classes = 2;
  std::uint64_t init_seed = 0;

  static ModelSpec linear(int d, int m_classes, std::uint64_t init_seed);
  static ModelSpec mlp(int d, int hidden, int m_classes,
                       std::uint64_t init_seed);

  int param_count() const;
  void validate() const;
  const char* arch_name() const;  // "linear" / "mlp"
};

/// Deterministic small random init: 0.1 * standard normal from init_seed.
ParamVector init_params(const ModelSpec& spec);

/// Softmax of the final-layer logits at input x (length feature_dim).
LabelDistribution forward(const ModelSpec& spec, const ParamVector& theta,
                          std::span<const double> x);

/// Exact gradient of batch_loss with respect to theta.
GradVector loss_grad(const ModelSpec& spec, const ParamVector& theta,
                     std::span<const Sample> batch, const LossSpec& loss);

/// ||a - b||; lengths must match.
double param_distance(const ParamVector& a, const ParamVector& b);

}  // namespace optstab
