#include "optstab/stability.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "optstab/parallel.hpp"
#include "optstab/stats.hpp"

namespace optstab {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  const int n_workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

namespace {

std::vector<std::vector<Sample>> materialize_batches(const Dataset& ds,
                                                     const Partition& p) {
  std::vector<std::vector<Sample>> out(p.batches.size());
  for (std::size_t b = 0; b < p.batches.size(); ++b) {
    out[b].reserve(p.batches[b].size());
    for (int idx : p.batches[b]) {
      if (idx < 0 || idx >= ds.size()) {
        throw std::invalid_argument("train: partition index out of range");
      }
      out[b].push_back(ds.samples[idx]);
    }
  }
  return out;
}

int snapshot_stride_for(int T) {
  if (T <= 1000) return 1;
  return (T + 999) / 1000;
}

bool same_samples(const std::vector<Sample>& a,
                  const std::vector<Sample>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].true_label != b[i].true_label) return false;
    if (a[i].x != b[i].x) return false;
    if (a[i].y.probs != b[i].y.probs) return false;
  }
  return true;
}

bool same_model(const ModelSpec& a, const ModelSpec& b) {
  return a.arch == b.arch && a.feature_dim == b.feature_dim &&
         a.hidden == b.hidden && a.num_classes == b.num_classes &&
         a.init_seed == b.init_seed;
}

bool same_loss(const LossSpec& a, const LossSpec& b) {
  return a.kind == b.kind && a.clamp_min == b.clamp_min && a.alpha == b.alpha;
}

bool same_opt(const OptimizerConfig& a, const OptimizerConfig& b) {
  return a.eta == b.eta && a.beta1 == b.beta1 && a.beta2 == b.beta2 &&
         a.epsilon == b.epsilon && a.lambda == b.lambda &&
         a.schedule.kind == b.schedule.kind &&
         a.schedule.value == b.schedule.value &&
         a.schedule.min_value == b.schedule.min_value &&
         a.schedule.horizon == b.schedule.horizon;
}

void validate_run(const TrainRun& run) {
  run.model.validate();
  run.opt.validate();
  run.loss.validate();
  const int k = run.parts.num_batches();
  for (int idx : run.seq.indices) {
    if (idx < 1 || idx > k) {
      throw std::invalid_argument("train: batch index out of [1, k]");
    }
  }
  if (run.model.feature_dim != run.dataset.feature_dim ||
      run.model.num_classes != run.dataset.num_classes) {
    throw std::invalid_argument("train: model/dataset shape mismatch");
  }
}

double probe_loss_diff(const ModelSpec& model, const LossSpec& loss,
                       const ParamVector& ta, const ParamVector& tb,
                       std::span<const Sample> probe_set) {
  double worst = 0.0;
  for (const Sample& s : probe_set) {
    const double la = loss_value(loss, forward(model, ta, s.x), s.y);
    const double lb = loss_value(loss, forward(model, tb, s.x), s.y);
    worst = std::max(worst, std::abs(la - lb));
  }
  return worst;
}

}  // namespace

TrainResult train(const TrainRun& run, const StepObserver& observer) {
  validate_run(run);
  const auto batches = materialize_batches(run.dataset, run.parts);
  const int T = run.seq.length();

  TrainResult out;
  out.theta = init_params(run.model);
  out.snapshot_stride = snapshot_stride_for(T);
  out.max_param_norm = out.theta.empty() ? 0.0 : l2_norm(out.theta);
  if (run.record_trajectory) out.trajectory.push_back(out.theta);

  OptimizerState state = OptimizerState::zeros(out.theta.size());
  for (int t = 1; t <= T; ++t) {
    const auto& batch = batches[run.seq.indices[t - 1] - 1];
    const GradVector g = loss_grad(run.model, out.theta, batch, run.loss);
    StepResult step = apply_rule(run.rule, out.theta, state, g, run.opt, t,
                                 static_cast<int>(batch.size()));
    if (observer) {
      StepObservation obs;
      obs.t = t;
      obs.grad_norm = l2_norm(g);
      obs.step_norm = param_distance(out.theta, step.theta);
      if (run.rule == UpdateRule::SgdL2) {
        obs.mhat_norm = std::nan("");
      } else {
        obs.mhat_norm = l2_norm(bias_correct(step.state, run.opt).first);
      }
      observer(obs);
    }
    out.theta = std::move(step.theta);
    state = std::move(step.state);
    out.max_param_norm = std::max(out.max_param_norm, l2_norm(out.theta));
    if (run.record_trajectory &&
        (t % out.snapshot_stride == 0 || t == T)) {
      out.trajectory.push_back(out.theta);
    }
  }
  return out;
}

TwinResult twin_train(const TrainRun& a, const TrainRun& b,
                      std::span<const Sample> probe_set,
                      bool probe_every_step) {
  validate_run(a);
  validate_run(b);
  if (!same_model(a.model, b.model) || a.rule != b.rule ||
      !same_loss(a.loss, b.loss) || !same_opt(a.opt, b.opt)) {
    throw std::invalid_argument("twin_train: runs must share model/opt/loss");
  }
  if (a.seq.length() != b.seq.length()) {
    throw std::invalid_argument("twin_train: runs must share T");
  }
  const bool same_sequence = a.seq.indices == b.seq.indices;
  const auto batches_a = materialize_batches(a.dataset, a.parts);
  const auto batches_b = materialize_batches(b.dataset, b.parts);
  if (same_sequence) {
    if (batches_a.size() != batches_b.size()) {
      throw std::invalid_argument("twin_train: partitions must share k");
    }
    int differing = 0;
    for (std::size_t i = 0; i < batches_a.size(); ++i) {
      if (!same_samples(batches_a[i], batches_b[i])) ++differing;
    }
    if (differing > 1) {
      throw std::invalid_argument(
          "twin_train: neighbor partitions may differ in at most one batch");
    }
  } else {
    bool same_data = batches_a.size() == batches_b.size();
    for (std::size_t i = 0; same_data && i < batches_a.size(); ++i) {
      same_data = same_samples(batches_a[i], batches_b[i]);
    }
    if (!same_data) {
      throw std::invalid_argument(
          "twin_train: resampled twins must share the dataset and partition");
    }
  }

  const int T = a.seq.length();
  TwinResult out;
  out.steps.reserve(T);
  out.theta_a = init_params(a.model);
  out.theta_b = out.theta_a;
  out.max_param_norm =
      out.theta_a.empty() ? 0.0 : l2_norm(out.theta_a);
  OptimizerState state_a = OptimizerState::zeros(out.theta_a.size());
  OptimizerState state_b = state_a;
  double prev_delta = 0.0;

  for (int t = 1; t <= T; ++t) {
    const auto& batch_a = batches_a[a.seq.indices[t - 1] - 1];
    const auto& batch_b = batches_b[b.seq.indices[t - 1] - 1];

    const GradVector ga = loss_grad(a.model, out.theta_a, batch_a, a.loss);
    const GradVector gb = loss_grad(b.model, out.theta_b, batch_b, b.loss);
    StepResult sa = apply_rule(a.rule, out.theta_a, state_a, ga, a.opt, t,
                               static_cast<int>(batch_a.size()));
    StepResult sb = apply_rule(b.rule, out.theta_b, state_b, gb, b.opt, t,
                               static_cast<int>(batch_b.size()));

    TwinStep rec;
    rec.t = t;
    rec.rules_equal = same_samples(batch_a, batch_b);
    rec.sigma_hat = std::max(param_distance(out.theta_a, sa.theta),
                             param_distance(out.theta_b, sb.theta));
    rec.delta = param_distance(sa.theta, sb.theta);
    rec.tau_hat = (rec.rules_equal && prev_delta > 0.0)
                      ? rec.delta / prev_delta
                      : std::nan("");
    rec.loss_diff_max =
        (probe_every_step && !probe_set.empty())
            ? probe_loss_diff(a.model, a.loss, sa.theta, sb.theta, probe_set)
            : std::nan("");
    out.steps.push_back(rec);

    out.theta_a = std::move(sa.theta);
    out.theta_b = std::move(sb.theta);
    state_a = std::move(sa.state);
    state_b = std::move(sb.state);
    prev_delta = rec.delta;
    out.max_param_norm = std::max(
        {out.max_param_norm, l2_norm(out.theta_a), l2_norm(out.theta_b)});
  }
  return out;
}

namespace {

TrainRun run_from_template(const TwinTemplate& tmpl,
                           const BatchSequence& seq) {
  TrainRun run;
  run.model = tmpl.model;
  run.dataset = tmpl.dataset;
  run.parts = tmpl.parts;
  run.seq = seq;
  run.rule = tmpl.rule;
  run.opt = tmpl.opt;
  run.loss = tmpl.loss;
  return run;
}

void check_estimator_inputs(const TwinTemplate& tmpl, int n_seeds,
                            std::span<const Sample> probe_set) {
  if (n_seeds < 1) {
    throw std::invalid_argument("stability estimate: need n_seeds >= 1");
  }
  if (probe_set.empty()) {
    throw std::invalid_argument("stability estimate: empty probe set");
  }
  if (tmpl.T < 1) {
    throw std::invalid_argument("stability estimate: need T >= 1");
  }
}

}  // namespace

StabilityEstimate beta_hat(const TwinTemplate& tmpl, int n_seeds,
                           std::span<const Sample> probe_set, int threads) {
  check_estimator_inputs(tmpl, n_seeds, probe_set);
  const int k = tmpl.parts.num_batches();
  const std::size_t n_probe = probe_set.size();

  std::vector<Vec64> diffs(n_seeds);  // per seed, per probe sample
  parallel_for(n_seeds, threads, [&](int s) {
    const std::string tag = std::to_string(s);
    RngStream r_rng(tmpl.seed, "R/" + tag);
    const BatchSequence seq = sample_sequence(k, tmpl.T, r_rng);
    const TrainRun run_a = run_from_template(tmpl, seq);

    TrainRun run_b = run_a;
    if (tmpl.neighbor_batch >= 0) {
      int replaced = tmpl.neighbor_batch;
      if (replaced == 0) {
        RngStream pick(tmpl.seed, "neighbor/" + tag);
        replaced = pick.uniform_int(1, k);
      }
      RngStream replace_rng(tmpl.seed, "replace/" + tag);
      auto [pb, dsb] =
          neighbor_partition(tmpl.parts, tmpl.dataset, replaced, replace_rng);
      run_b.parts = std::move(pb);
      run_b.dataset = std::move(dsb);
    }
    // neighbor_batch = -1 keeps run_b identical (zero-difference neighbor).

    const TwinResult twin = twin_train(run_a, run_b);
    Vec64& d = diffs[s];
    d.resize(n_probe);
    for (std::size_t i = 0; i < n_probe; ++i) {
      const Sample& p = probe_set[i];
      const double la =
          loss_value(tmpl.loss, forward(tmpl.model, twin.theta_a, p.x), p.y);
      const double lb =
          loss_value(tmpl.loss, forward(tmpl.model, twin.theta_b, p.x), p.y);
      d[i] = std::abs(la - lb);
    }
  });

  StabilityEstimate est;
  est.n_seeds = n_seeds;
  est.probe_size = static_cast<int>(n_probe);
  est.per_seed_max.resize(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    double worst = 0.0;
    for (double d : diffs[s]) worst = std::max(worst, d);
    est.per_seed_max[s] = worst;
  }
  // E_R by seed-average per sample, then sup over the probe set.
  double best = 0.0;
  for (std::size_t i = 0; i < n_probe; ++i) {
    double acc = 0.0;
    for (int s = 0; s < n_seeds; ++s) acc += diffs[s][i];
    best = std::max(best, acc / n_seeds);
  }
  est.value = best;
  return est;
}

StabilityEstimate rho_hat(const TwinTemplate& tmpl, int n_seeds,
                          std::span<const Sample> probe_set, int threads) {
  check_estimator_inputs(tmpl, n_seeds, probe_set);
  if (tmpl.T < 2) {
    throw std::invalid_argument("rho_hat: need T >= 2");
  }
  const int k = tmpl.parts.num_batches();

  Vec64 per_seed(n_seeds, 0.0);
  parallel_for(n_seeds, threads, [&](int s) {
    const std::string tag = std::to_string(s);
    RngStream r_rng(tmpl.seed, "R/" + tag);
    const BatchSequence seq = sample_sequence(k, tmpl.T, r_rng);

    RngStream swap_rng(tmpl.seed, "swap/" + tag);
    const int half = tmpl.T / 2;
    const int pos_i = swap_rng.uniform_int(1, half);
    const int pos_j = swap_rng.uniform_int(half + 1, tmpl.T);
    const BatchSequence swapped = swap_two(seq, pos_i, pos_j);

    const TrainRun run_a = run_from_template(tmpl, seq);
    const TrainRun run_b = run_from_template(tmpl, swapped);
    const TwinResult twin = twin_train(run_a, run_b);
    per_seed[s] = probe_loss_diff(tmpl.model, tmpl.loss, twin.theta_a,
                                  twin.theta_b, probe_set);
  });

  StabilityEstimate est;
  est.n_seeds = n_seeds;
  est.probe_size = static_cast<int>(probe_set.size());
  est.per_seed_max.assign(per_seed.begin(), per_seed.end());
  est.value = mean(per_seed);
  return est;
}

double empirical_risk(const ModelSpec& spec, const ParamVector& theta,
                      const Dataset& ds, const LossSpec& loss) {
  if (ds.size() == 0) {
    throw std::invalid_argument("empirical_risk: empty dataset");
  }
  double sum = 0.0;
  for (const Sample& s : ds.samples) {
    sum += loss_value(loss, forward(spec, theta, s.x), s.y);
  }
  return sum / ds.size();
}

double gen_error_estimate(const ModelSpec& spec, const ParamVector& theta,
                          const Dataset& train_set, const Dataset& val_set,
                          const LossSpec& loss) {
  return std::abs(empirical_risk(spec, theta, train_set, loss) -
                  empirical_risk(spec, theta, val_set, loss));
}

MaeCs mae_cs(const ModelSpec& spec, const ParamVector& theta,
             const Dataset& test_set, int threshold) {
  if (test_set.size() == 0) {
    throw std::invalid_argument("mae_cs: empty test set");
  }
  if (threshold < 1) {
    throw std::invalid_argument("mae_cs: threshold must be >= 1");
  }
  double abs_err_sum = 0.0;
  int within = 0;
  for (const Sample& s : test_set.samples) {
    const LabelDistribution yhat = forward(spec, theta, s.x);
    int pred = 1;
    for (int m = 2; m <= yhat.size(); ++m) {
      if (yhat.probs[m - 1] > yhat.probs[pred - 1]) pred = m;
    }
    const int err = std::abs(pred - s.true_label);
    abs_err_sum += err;
    if (err < threshold) ++within;
  }
  MaeCs out;
  out.mae = abs_err_sum / test_set.size();
  out.cs_percent = 100.0 * within / test_set.size();
  return out;
}

}  // namespace optstab
