#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "optstab/rng.hpp"
#include "optstab/vec.hpp"

namespace optstab {

/// Probability mass over M ordered class bins (ages). Entries are strictly
/// positive and sum to 1 within 1e-9; both are enforced at construction.
struct LabelDistribution {
  Vec64 probs;

  int size() const { return static_cast<int>(probs.size()); }
};

/// Validates and wraps a probability vector.
LabelDistribution label_distribution(Vec64 probs);

/// Discretized Gaussian over bins 1..M centered at `center`, renormalized.
/// center must lie in [1, M] and sigma must be positive.
LabelDistribution make_label_distribution(int center, int m_classes,
                                          double sigma);

struct Sample {
  Vec64 x;  // feature vector, ||x|| <= 1
  LabelDistribution y;
  int true_label = 1;  // class index in [1, M]
};

/// Fixed ground-truth scoring map behind a synthetic dataset: class scores
/// are rows . x, the noisy argmax is the true label.
struct TaskSpec {
  std::vector<Vec64> score_rows;  // M rows of length d
  int feature_dim = 0;
  int num_classes = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int feature_dim = 0;
  int num_classes = 0;
  double sigma = 0.0;        // label spread used for targets
  double label_noise = 0.0;  // probability of +-1 label jitter
  std::uint64_t seed = 0;    // generator seed recorded for export
  std::optional<TaskSpec> task;  // present for generated datasets

  int size() const { return static_cast<int>(samples.size()); }
};

TaskSpec make_task(int d, int m_classes, RngStream& rng);

/// n samples from the task: features drawn normal then rescaled into the
/// unit ball, labels from the noisy ground-truth argmax, targets via
/// make_label_distribution.
Dataset gen_from_task(const TaskSpec& task, int n, double sigma,
                      double label_noise, RngStream& rng);

/// Convenience generator deriving the task and the samples from one stream.
/// Identical (n, d, M, sigma, stream) inputs give identical datasets.
Dataset gen_synthetic_dataset(int n, int d, int m_classes, double sigma,
                              RngStream& rng, double label_noise = 0.1);

/// Mini-batch partition: k index batches of identical size b. When k does
/// not divide N the last sample's index is repeated until it does.
struct Partition {
  std::vector<std::vector<int>> batches;  // 0-based sample indices
  int batch_size = 0;

  int num_batches() const { return static_cast<int>(batches.size()); }
};

/// Shuffled partition into k batches; requires 1 < k < N.
Partition partition(const Dataset& ds, int k, RngStream& rng);

/// Neighboring (partition, dataset): batch `batch_idx` (1-based) is replaced
/// by freshly drawn samples appended to a copy of the dataset; every other
/// batch is untouched. The dataset must carry its generator (task).
std::pair<Partition, Dataset> neighbor_partition(const Partition& p,
                                                 const Dataset& ds,
                                                 int batch_idx,
                                                 RngStream& rng);

/// Random batch-index sequence R. Entries are 1-based, each in [1, k].
struct BatchSequence {
  std::vector<int> indices;

  int length() const { return static_cast<int>(indices.size()); }
};

BatchSequence sample_sequence(int k, int T, RngStream& rng);

/// Exchange the entries at 1-based positions pos_i < pos_j.
BatchSequence swap_two(const BatchSequence& r, int pos_i, int pos_j);

}  // namespace optstab
