#include "optstab/models.hpp"

#include <cmath>
#include <stdexcept>

namespace optstab {

ModelSpec ModelSpec::linear(int d, int m_classes, std::uint64_t init_seed) {
  ModelSpec s;
  s.arch = Arch::LinearSoftmax;
  s.feature_dim = d;
  s.num_classes = m_classes;
  s.init_seed = init_seed;
  s.validate();
  return s;
}

ModelSpec ModelSpec::mlp(int d, int hidden, int m_classes,
                         std::uint64_t init_seed) {
  ModelSpec s;
  s.arch = Arch::Mlp;
  s.feature_dim = d;
  s.hidden = hidden;
  s.num_classes = m_classes;
  s.init_seed = init_seed;
  s.validate();
  return s;
}

int ModelSpec::param_count() const {
  if (arch == Arch::LinearSoftmax) {
    return feature_dim * num_classes + num_classes;
  }
  return feature_dim * hidden + hidden + hidden * num_classes + num_classes;
}

void ModelSpec::validate() const {
  if (feature_dim < 1 || num_classes < 1) {
    throw std::invalid_argument("ModelSpec: need d >= 1 and M >= 1");
  }
  if (arch == Arch::Mlp && hidden < 1) {
    throw std::invalid_argument("ModelSpec: MLP needs hidden >= 1");
  }
}

const char* ModelSpec::arch_name() const {
  return arch == Arch::LinearSoftmax ? "linear" : "mlp";
}

ParamVector init_params(const ModelSpec& spec) {
  spec.validate();
  RngStream rng(spec.init_seed, "init");
  ParamVector theta = rng.normal_vec(
      static_cast<std::size_t>(spec.param_count()));
  for (double& w : theta) w *= 0.1;
  return theta;
}

namespace {

void require_theta(const ModelSpec& spec, const ParamVector& theta) {
  if (static_cast<int>(theta.size()) != spec.param_count()) {
    throw std::invalid_argument("model: parameter length mismatch");
  }
}

Vec64 linear_logits(const ModelSpec& spec, const ParamVector& theta,
                    std::span<const double> x) {
  const int d = spec.feature_dim;
  const int m = spec.num_classes;
  Vec64 z(m);
  for (int i = 0; i < m; ++i) {
    double acc = theta[d * m + i];  // bias
    const double* row = &theta[i * d];
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    z[i] = acc;
  }
  return z;
}

struct MlpLayout {
  int w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets
};

MlpLayout mlp_layout(const ModelSpec& spec) {
  MlpLayout l;
  l.w1 = 0;
  l.b1 = spec.feature_dim * spec.hidden;
  l.w2 = l.b1 + spec.hidden;
  l.b2 = l.w2 + spec.hidden * spec.num_classes;
  return l;
}

Vec64 mlp_hidden(const ModelSpec& spec, const ParamVector& theta,
                 std::span<const double> x) {
  const MlpLayout l = mlp_layout(spec);
  const int d = spec.feature_dim;
  Vec64 h(spec.hidden);
  for (int i = 0; i < spec.hidden; ++i) {
    double acc = theta[l.b1 + i];
    const double* row = &theta[l.w1 + i * d];
    for (int j = 0; j < d; ++j) acc += row[j] * x[j];
    h[i] = std::tanh(acc);
  }
  return h;
}

Vec64 mlp_logits(const ModelSpec& spec, const ParamVector& theta,
                 const Vec64& h) {
  const MlpLayout l = mlp_layout(spec);
  Vec64 z(spec.num_classes);
  for (int i = 0; i < spec.num_classes; ++i) {
    double acc = theta[l.b2 + i];
    const double* row = &theta[l.w2 + i * spec.hidden];
    for (int j = 0; j < spec.hidden; ++j) acc += row[j] * h[j];
    z[i] = acc;
  }
  return z;
}

// d loss / d logits from the yhat-space gradient:
// dz_j = yhat_j (gy_j - sum_i gy_i yhat_i).
Vec64 softmax_backward(const Vec64& yhat, const Vec64& gy) {
  double inner = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) inner += gy[i] * yhat[i];
  Vec64 dz(yhat.size());
  for (std::size_t j = 0; j < yhat.size(); ++j) {
    dz[j] = yhat[j] * (gy[j] - inner);
  }
  return dz;
}

}  // namespace

LabelDistribution forward(const ModelSpec& spec, const ParamVector& theta,
                          std::span<const double> x) {
  require_theta(spec, theta);
  if (static_cast<int>(x.size()) != spec.feature_dim) {
    throw std::invalid_argument("forward: input length mismatch");
  }
  if (spec.arch == ModelSpec::Arch::LinearSoftmax) {
    return LabelDistribution{softmax(linear_logits(spec, theta, x))};
  }
  const Vec64 h = mlp_hidden(spec, theta, x);
  return LabelDistribution{softmax(mlp_logits(spec, theta, h))};
}

GradVector loss_grad(const ModelSpec& spec, const ParamVector& theta,
                     std::span<const Sample> batch, const LossSpec& loss) {
  require_theta(spec, theta);
  if (batch.empty()) {
    throw std::invalid_argument("loss_grad: empty batch");
  }
  const int d = spec.feature_dim;
  const int m = spec.num_classes;
  GradVector g(theta.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (const Sample& s : batch) {
    if (static_cast<int>(s.x.size()) != d) {
      throw std::invalid_argument("loss_grad: sample dimension mismatch");
    }
    if (spec.arch == ModelSpec::Arch::LinearSoftmax) {
      const Vec64 yhat = softmax(linear_logits(spec, theta, s.x));
      const Vec64 gy = loss_grad_yhat(loss, LabelDistribution{yhat}, s.y);
      const Vec64 dz = softmax_backward(yhat, gy);
      for (int i = 0; i < m; ++i) {
        const double di = dz[i] * scale;
        double* row = &g[i * d];
        for (int j = 0; j < d; ++j) row[j] += di * s.x[j];
        g[d * m + i] += di;
      }
    } else {
      const MlpLayout l = mlp_layout(spec);
      const Vec64 h = mlp_hidden(spec, theta, s.x);
      const Vec64 yhat = softmax(mlp_logits(spec, theta, h));
      const Vec64 gy = loss_grad_yhat(loss, LabelDistribution{yhat}, s.y);
      const Vec64 dz2 = softmax_backward(yhat, gy);
      // Output layer.
      for (int i = 0; i < m; ++i) {
        const double di = dz2[i] * scale;
        double* row = &g[l.w2 + i * spec.hidden];
        for (int j = 0; j < spec.hidden; ++j) row[j] += di * h[j];
        g[l.b2 + i] += di;
      }
      // Hidden layer through tanh.
      for (int j = 0; j < spec.hidden; ++j) {
        double dh = 0.0;
        for (int i = 0; i < m; ++i) {
          dh += theta[l.w2 + i * spec.hidden + j] * dz2[i];
        }
        const double dz1 = dh * (1.0 - h[j] * h[j]) * scale;
        double* row = &g[l.w1 + j * d];
        for (int jj = 0; jj < d; ++jj) row[jj] += dz1 * s.x[jj];
        g[l.b1 + j] += dz1;
      }
    }
  }
  return g;
}

double param_distance(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("param_distance: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace optstab
