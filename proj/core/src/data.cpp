#include "optstab/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optstab {

LabelDistribution label_distribution(Vec64 probs) {
  if (probs.empty()) {
    throw std::invalid_argument("label_distribution: empty vector");
  }
  require_finite(probs, "label_distribution");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) {
      throw std::invalid_argument(
          "label_distribution: entries must be strictly positive");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("label_distribution: entries must sum to 1");
  }
  return LabelDistribution{std::move(probs)};
}

LabelDistribution make_label_distribution(int center, int m_classes,
                                          double sigma) {
  if (m_classes < 1) {
    throw std::invalid_argument("make_label_distribution: M must be >= 1");
  }
  if (center < 1 || center > m_classes) {
    throw std::invalid_argument(
        "make_label_distribution: center out of [1, M]");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument(
        "make_label_distribution: sigma must be positive");
  }
  Vec64 probs(m_classes);
  double sum = 0.0;
  for (int m = 1; m <= m_classes; ++m) {
    const double d = static_cast<double>(m - center);
    probs[m - 1] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += probs[m - 1];
  }
  for (double& p : probs) p /= sum;
  return LabelDistribution{std::move(probs)};
}

TaskSpec make_task(int d, int m_classes, RngStream& rng) {
  if (d < 1 || m_classes < 2) {
    throw std::invalid_argument("make_task: need d >= 1 and M >= 2");
  }
  TaskSpec task;
  task.feature_dim = d;
  task.num_classes = m_classes;
  task.score_rows.reserve(m_classes);
  for (int m = 0; m < m_classes; ++m) {
    task.score_rows.push_back(rng.normal_vec(static_cast<std::size_t>(d)));
  }
  return task;
}

Dataset gen_from_task(const TaskSpec& task, int n, double sigma,
                      double label_noise, RngStream& rng) {
  if (n < 2) {
    throw std::invalid_argument("gen_from_task: need n >= 2");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("gen_from_task: sigma must be positive");
  }
  if (label_noise < 0.0 || label_noise > 1.0) {
    throw std::invalid_argument("gen_from_task: label_noise out of [0, 1]");
  }
  Dataset ds;
  ds.feature_dim = task.feature_dim;
  ds.num_classes = task.num_classes;
  ds.sigma = sigma;
  ds.label_noise = label_noise;
  ds.seed = rng.seed();
  ds.task = task;
  ds.samples.reserve(n);
  const int m_classes = task.num_classes;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.x = rng.normal_vec(static_cast<std::size_t>(task.feature_dim));
    const double norm = l2_norm(s.x);
    if (norm > 1.0) {
      for (double& v : s.x) v /= norm;
      // Rounding can leave the rescaled norm a few ulps above 1.
      while (l2_norm(s.x) > 1.0) {
        for (double& v : s.x) v *= 0.99999999999999989;
      }
    }
    // Noisy ground truth: argmax of the task scores, then +-1 jitter.
    int best = 1;
    double best_score = dot(task.score_rows[0], s.x);
    for (int m = 2; m <= m_classes; ++m) {
      const double score = dot(task.score_rows[m - 1], s.x);
      if (score > best_score) {
        best_score = score;
        best = m;
      }
    }
    if (rng.uniform01() < label_noise) {
      best += (rng.uniform01() < 0.5) ? -1 : 1;
      best = std::clamp(best, 1, m_classes);
    }
    s.true_label = best;
    s.y = make_label_distribution(best, m_classes, sigma);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset gen_synthetic_dataset(int n, int d, int m_classes, double sigma,
                              RngStream& rng, double label_noise) {
  RngStream task_rng = rng.fork("task");
  const TaskSpec task = make_task(d, m_classes, task_rng);
  return gen_from_task(task, n, sigma, label_noise, rng);
}

Partition partition(const Dataset& ds, int k, RngStream& rng) {
  const int n = ds.size();
  if (k <= 1 || k >= n) {
    throw std::invalid_argument("partition: k must satisfy 1 < k < N");
  }
  // Pad by repeating the last index until k divides the count.
  std::vector<int> indices(n);
  for (int i = 0; i < n; ++i) indices[i] = i;
  while (static_cast<int>(indices.size()) % k != 0) {
    indices.push_back(n - 1);
  }
  const int padded = static_cast<int>(indices.size());
  for (int i = padded - 1; i > 0; --i) {
    std::swap(indices[i], indices[rng.uniform_int(0, i)]);
  }
  Partition p;
  p.batch_size = padded / k;
  p.batches.resize(k);
  for (int b = 0; b < k; ++b) {
    p.batches[b].assign(indices.begin() + b * p.batch_size,
                        indices.begin() + (b + 1) * p.batch_size);
  }
  return p;
}

std::pair<Partition, Dataset> neighbor_partition(const Partition& p,
                                                 const Dataset& ds,
                                                 int batch_idx,
                                                 RngStream& rng) {
  if (batch_idx < 1 || batch_idx > p.num_batches()) {
    throw std::invalid_argument("neighbor_partition: batch index out of [1, k]");
  }
  if (!ds.task.has_value()) {
    throw std::invalid_argument(
        "neighbor_partition: dataset has no generator task to draw from");
  }
  const int b = p.batch_size;
  Dataset fresh = gen_from_task(*ds.task, b, ds.sigma, ds.label_noise, rng);

  Dataset out_ds = ds;
  Partition out_p = p;
  std::vector<int> replacement(b);
  for (int i = 0; i < b; ++i) {
    replacement[i] = out_ds.size();
    out_ds.samples.push_back(std::move(fresh.samples[i]));
  }
  out_p.batches[batch_idx - 1] = std::move(replacement);
  return {std::move(out_p), std::move(out_ds)};
}

BatchSequence sample_sequence(int k, int T, RngStream& rng) {
  if (k < 2) {
    throw std::invalid_argument("sample_sequence: need k >= 2");
  }
  if (T < 1) {
    throw std::invalid_argument("sample_sequence: need T >= 1");
  }
  BatchSequence r;
  r.indices.resize(T);
  for (int t = 0; t < T; ++t) r.indices[t] = rng.uniform_int(1, k);
  return r;
}

BatchSequence swap_two(const BatchSequence& r, int pos_i, int pos_j) {
  const int T = r.length();
  if (pos_i < 1 || pos_j > T || pos_i >= pos_j) {
    throw std::invalid_argument(
        "swap_two: positions must satisfy 1 <= pos_i < pos_j <= T");
  }
  BatchSequence out = r;
  std::swap(out.indices[pos_i - 1], out.indices[pos_j - 1]);
  return out;
}

}  // namespace optstab
