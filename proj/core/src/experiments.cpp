#include "optstab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>
#include <tuple>

#include "optstab/grad_check.hpp"
#include "optstab/io.hpp"
#include "optstab/parallel.hpp"
#include "optstab/stats.hpp"

namespace optstab {

namespace fs = std::filesystem;

std::string ExperimentResult::lookup(const std::string& key) const {
  for (const auto& [k, v] : summary) {
    if (k == key) return v;
  }
  return "";
}

namespace {

struct ExperimentEnv {
  ModelSpec model;
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<Sample> probe;
  Partition parts;
  int k = 0;
  int b = 0;
};

// All randomness descends from data.seed through fixed labels; nothing here
// depends on call order.
ExperimentEnv build_env(const ExperimentConfig& cfg, bool with_partition) {
  ExperimentEnv env;
  RngStream task_rng(cfg.data.seed, "task");
  const TaskSpec task = make_task(cfg.data.d, cfg.data.m, task_rng);

  RngStream train_rng(cfg.data.seed, "train");
  env.train = gen_from_task(task, static_cast<int>(cfg.data.n),
                            cfg.data.sigma, cfg.data.label_noise, train_rng);
  RngStream val_rng(cfg.data.seed, "val");
  env.val = gen_from_task(task, static_cast<int>(cfg.resolved_val_n()),
                          cfg.data.sigma, cfg.data.label_noise, val_rng);
  RngStream test_rng(cfg.data.seed, "test");
  env.test = gen_from_task(task, static_cast<int>(cfg.resolved_test_n()),
                           cfg.data.sigma, cfg.data.label_noise, test_rng);
  RngStream probe_rng(cfg.data.seed, "probe");
  const Dataset probe_ds = gen_from_task(task, cfg.run.probe_size,
                                         cfg.data.sigma, cfg.data.label_noise,
                                         probe_rng);
  env.probe = probe_ds.samples;

  if (cfg.model.arch == ModelSpec::Arch::LinearSoftmax) {
    env.model = ModelSpec::linear(cfg.data.d, cfg.data.m, cfg.data.seed);
  } else {
    env.model =
        ModelSpec::mlp(cfg.data.d, cfg.model.hidden, cfg.data.m, cfg.data.seed);
  }

  if (with_partition) {
    env.k = cfg.resolved_k();
    env.b = cfg.resolved_b();
    RngStream part_rng(cfg.data.seed, "partition");
    env.parts = partition(env.train, env.k, part_rng);
  }
  return env;
}

std::string config_comment_block(const ExperimentConfig& cfg) {
  std::istringstream in(cfg.serialize());
  std::string out = "# resolved configuration\n";
  std::string line;
  while (std::getline(in, line)) {
    out += "# " + line + "\n";
  }
  return out;
}

void write_csv(const ExperimentConfig& cfg, const fs::path& path,
               const CsvWriter& csv) {
  write_text_atomic(path, config_comment_block(cfg) + csv.str());
}

void write_summary(const ExperimentConfig& cfg, const fs::path& out_dir,
                   const ExperimentResult& result) {
  std::string text = "# optstab summary\n";
  for (const auto& [k, v] : result.summary) {
    text += k + " = " + v + "\n";
  }
  text += "\n# resolved configuration\n";
  text += cfg.serialize();
  write_text_atomic(out_dir / "summary.txt", text);
  write_text_atomic(out_dir / "config_echo.cfg", cfg.serialize());
}

void add(ExperimentResult& r, const std::string& key, const std::string& v) {
  r.summary.emplace_back(key, v);
}

void add(ExperimentResult& r, const std::string& key, double v) {
  r.summary.emplace_back(key, format_double(v));
}

void add_seed_stats(ExperimentResult& r, const std::string& prefix,
                    const Vec64& per_seed) {
  Vec64 sorted = per_seed;
  std::sort(sorted.begin(), sorted.end());
  add(r, prefix + "_seed_min", sorted.front());
  add(r, prefix + "_seed_median", median(sorted));
  add(r, prefix + "_seed_max", sorted.back());
}

std::vector<Sample> gather(const Dataset& ds, const std::vector<int>& idx) {
  std::vector<Sample> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(ds.samples[i]);
  return out;
}

// ---------------------------------------------------------------------------
// gradcheck

double grad_rel_err(const Vec64& analytic, const Vec64& numeric) {
  double worst_abs = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst_abs = std::max(worst_abs, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 0.0 ? worst_abs / scale : worst_abs;
}

ExperimentResult run_gradcheck(const ExperimentConfig& cfg,
                               const fs::path& out_dir) {
  constexpr int kCases = 25;
  constexpr double kH = 1e-5;

  ExperimentResult result;
  add(result, "kind", "gradcheck");
  CsvWriter csv({"loss", "arch", "case", "rel_err"});
  double overall = 0.0;

  std::vector<ModelSpec> archs = {
      ModelSpec::linear(cfg.data.d, cfg.data.m, cfg.data.seed),
      ModelSpec::mlp(cfg.data.d, cfg.model.hidden, cfg.data.m, cfg.data.seed)};

  for (const LossSpec& loss : cfg.losses) {
    for (const ModelSpec& spec : archs) {
      RngStream rng(cfg.data.seed,
                    std::string("gradcheck/") + loss.name() + "/" +
                        spec.arch_name());
      double combo_max = 0.0;
      for (int c = 0; c < kCases; ++c) {
        // Random instance: small theta, three-sample batch.
        ParamVector theta =
            rng.normal_vec(static_cast<std::size_t>(spec.param_count()));
        for (double& w : theta) w *= 0.3;
        std::vector<Sample> batch(3);
        for (Sample& s : batch) {
          s.x = rng.normal_vec(static_cast<std::size_t>(spec.feature_dim));
          const double nrm = l2_norm(s.x);
          if (nrm > 1.0) {
            for (double& v : s.x) v /= nrm;
          }
          s.true_label = rng.uniform_int(1, spec.num_classes);
          s.y = make_label_distribution(s.true_label, spec.num_classes,
                                        cfg.data.sigma);
        }
        const GradVector analytic = loss_grad(spec, theta, batch, loss);
        const Vec64 numeric = finite_diff_grad(
            [&](const Vec64& th) { return batch_loss(spec, th, batch, loss); },
            theta, kH);
        const double rel = grad_rel_err(analytic, numeric);
        combo_max = std::max(combo_max, rel);
        csv.add_row({loss.name(), spec.arch_name(), std::to_string(c),
                     format_double(rel)});
      }
      add(result,
          std::string("gradcheck.") + loss.name() + "." + spec.arch_name() +
              ".max_rel_err",
          combo_max);
      overall = std::max(overall, combo_max);
    }
  }
  add(result, "overall_max_rel_err", overall);
  write_csv(cfg, out_dir / "gradcheck.csv", csv);
  write_summary(cfg, out_dir, result);
  return result;
}

// ---------------------------------------------------------------------------
// stability / bdc

struct TwinRows {
  std::vector<TwinStep> steps;
  Vec64 probe_diffs;      // final |loss difference| per probe sample
  double e_hat = 0.0;     // from run A's final parameters
  double mae = 0.0;
  double cs = 0.0;
  double max_param_norm = 0.0;
  ParamVector theta_final;  // run A
};

struct AuditCounters {
  long steps = 0;
  long violations = 0;
};

void audit_growth(const std::vector<TwinStep>& steps, AuditCounters& audit) {
  double prev = 0.0;
  for (const TwinStep& s : steps) {
    ++audit.steps;
    bool ok = s.delta <= prev + 2.0 * s.sigma_hat + 1e-9;
    if (ok && s.rules_equal) {
      if (prev == 0.0) {
        ok = s.delta <= 1e-9;
      } else {
        ok = s.delta <= s.tau_hat * prev + 1e-9;
      }
    }
    if (!ok) ++audit.violations;
    prev = s.delta;
  }
}

void append_twin_rows(CsvWriter& csv, int seed, const std::vector<TwinStep>& steps) {
  for (const TwinStep& s : steps) {
    csv.add_row({std::to_string(seed), std::to_string(s.t),
                 format_double(s.delta), format_double(s.loss_diff_max),
                 format_double(s.sigma_hat), format_double(s.tau_hat)});
  }
}

TwinTemplate template_from_env(const ExperimentConfig& cfg,
                               const ExperimentEnv& env) {
  TwinTemplate tmpl;
  tmpl.model = env.model;
  tmpl.dataset = env.train;
  tmpl.parts = env.parts;
  tmpl.rule = cfg.optimizer.rule;
  tmpl.opt = cfg.optimizer.cfg;
  tmpl.loss = cfg.losses.front();
  tmpl.T = static_cast<int>(cfg.run.T);
  tmpl.seed = cfg.data.seed;
  tmpl.neighbor_batch = cfg.stability.neighbor_batch;
  return tmpl;
}

// One neighbor twin, mirroring the substream labels of beta_hat() so the
// emitted estimate matches the library function exactly.
TwinRows run_neighbor_seed(const ExperimentConfig& cfg,
                           const ExperimentEnv& env, const TwinTemplate& tmpl,
                           int s) {
  const std::string tag = std::to_string(s);
  RngStream r_rng(tmpl.seed, "R/" + tag);
  const BatchSequence seq = sample_sequence(env.k, tmpl.T, r_rng);

  TrainRun run_a;
  run_a.model = tmpl.model;
  run_a.dataset = tmpl.dataset;
  run_a.parts = tmpl.parts;
  run_a.seq = seq;
  run_a.rule = tmpl.rule;
  run_a.opt = tmpl.opt;
  run_a.loss = tmpl.loss;

  TrainRun run_b = run_a;
  if (tmpl.neighbor_batch >= 0) {
    int replaced = tmpl.neighbor_batch;
    if (replaced == 0) {
      RngStream pick(tmpl.seed, "neighbor/" + tag);
      replaced = pick.uniform_int(1, env.k);
    }
    RngStream replace_rng(tmpl.seed, "replace/" + tag);
    auto [pb, dsb] =
        neighbor_partition(tmpl.parts, tmpl.dataset, replaced, replace_rng);
    run_b.parts = std::move(pb);
    run_b.dataset = std::move(dsb);
  }

  const TwinResult twin = twin_train(run_a, run_b, env.probe, true);

  TwinRows rows;
  rows.steps = twin.steps;
  rows.max_param_norm = twin.max_param_norm;
  rows.probe_diffs.resize(env.probe.size());
  for (std::size_t i = 0; i < env.probe.size(); ++i) {
    const Sample& p = env.probe[i];
    const double la =
        loss_value(tmpl.loss, forward(tmpl.model, twin.theta_a, p.x), p.y);
    const double lb =
        loss_value(tmpl.loss, forward(tmpl.model, twin.theta_b, p.x), p.y);
    rows.probe_diffs[i] = std::abs(la - lb);
  }
  rows.e_hat = gen_error_estimate(tmpl.model, twin.theta_a, env.train, env.val,
                                  tmpl.loss);
  const MaeCs mc = mae_cs(tmpl.model, twin.theta_a, env.test,
                          cfg.run.cs_threshold);
  rows.mae = mc.mae;
  rows.cs = mc.cs_percent;
  rows.theta_final = twin.theta_a;
  return rows;
}

// One swapped-sequence twin, mirroring rho_hat().
TwinRows run_swap_seed(const ExperimentConfig& cfg, const ExperimentEnv& env,
                       const TwinTemplate& tmpl, int s) {
  const std::string tag = std::to_string(s);
  RngStream r_rng(tmpl.seed, "R/" + tag);
  const BatchSequence seq = sample_sequence(env.k, tmpl.T, r_rng);

  RngStream swap_rng(tmpl.seed, "swap/" + tag);
  const int half = tmpl.T / 2;
  const int pos_i = swap_rng.uniform_int(1, half);
  const int pos_j = swap_rng.uniform_int(half + 1, tmpl.T);
  const BatchSequence swapped = swap_two(seq, pos_i, pos_j);

  TrainRun run_a;
  run_a.model = tmpl.model;
  run_a.dataset = tmpl.dataset;
  run_a.parts = tmpl.parts;
  run_a.seq = seq;
  run_a.rule = tmpl.rule;
  run_a.opt = tmpl.opt;
  run_a.loss = tmpl.loss;
  TrainRun run_b = run_a;
  run_b.seq = swapped;

  const TwinResult twin = twin_train(run_a, run_b, env.probe, true);

  TwinRows rows;
  rows.steps = twin.steps;
  rows.max_param_norm = twin.max_param_norm;
  rows.probe_diffs.resize(env.probe.size());
  for (std::size_t i = 0; i < env.probe.size(); ++i) {
    const Sample& p = env.probe[i];
    const double la =
        loss_value(tmpl.loss, forward(tmpl.model, twin.theta_a, p.x), p.y);
    const double lb =
        loss_value(tmpl.loss, forward(tmpl.model, twin.theta_b, p.x), p.y);
    rows.probe_diffs[i] = std::abs(la - lb);
  }
  return rows;
}

ExperimentResult run_stability(const ExperimentConfig& cfg,
                               const fs::path& out_dir, int threads,
                               bool with_neighbor) {
  const ExperimentEnv env = build_env(cfg, true);
  const TwinTemplate tmpl = template_from_env(cfg, env);
  const int n_seeds = cfg.run.n_seeds;

  std::vector<TwinRows> neighbor_rows(with_neighbor ? n_seeds : 0);
  std::vector<TwinRows> swap_rows(n_seeds);
  parallel_for(n_seeds, threads, [&](int s) {
    if (with_neighbor) {
      neighbor_rows[s] = run_neighbor_seed(cfg, env, tmpl, s);
    }
    swap_rows[s] = run_swap_seed(cfg, env, tmpl, s);
  });

  ExperimentResult result;
  add(result, "kind", with_neighbor ? "stability" : "bdc");
  add(result, "loss", cfg.losses.front().name());
  add(result, "rule", rule_name(cfg.optimizer.rule));
  add(result, "T", std::to_string(cfg.run.T));
  add(result, "b", std::to_string(env.b));
  add(result, "k", std::to_string(env.k));
  add(result, "n_seeds", std::to_string(n_seeds));
  add(result, "probe_size", std::to_string(cfg.run.probe_size));

  AuditCounters audit;
  double theta_sup_auto = 0.0;

  if (with_neighbor) {
    CsvWriter twin_csv({"seed", "t", "delta_t", "loss_diff_max",
                        "sigma_hat_t", "tau_hat_t"});
    Vec64 per_seed_max(n_seeds, 0.0);
    Vec64 per_sample_sum(env.probe.size(), 0.0);
    Vec64 e_hats(n_seeds), maes(n_seeds), css(n_seeds);
    for (int s = 0; s < n_seeds; ++s) {
      const TwinRows& rows = neighbor_rows[s];
      append_twin_rows(twin_csv, s, rows.steps);
      audit_growth(rows.steps, audit);
      for (std::size_t i = 0; i < rows.probe_diffs.size(); ++i) {
        per_sample_sum[i] += rows.probe_diffs[i];
        per_seed_max[s] = std::max(per_seed_max[s], rows.probe_diffs[i]);
      }
      e_hats[s] = rows.e_hat;
      maes[s] = rows.mae;
      css[s] = rows.cs;
      theta_sup_auto = std::max(theta_sup_auto, rows.max_param_norm);
    }
    // Same reduction shape as beta_hat(): seed-sum first, divide once.
    double beta = 0.0;
    for (double sum : per_sample_sum) beta = std::max(beta, sum / n_seeds);
    result.beta = beta;
    result.per_seed_beta.assign(per_seed_max.begin(), per_seed_max.end());
    add(result, "beta_hat", beta);
    add_seed_stats(result, "beta_hat", per_seed_max);
    add(result, "e_hat_median", median(e_hats));
    add(result, "mae_median", median(maes));
    add(result, "cs_median", median(css));
    write_csv(cfg, out_dir / "twin_steps.csv", twin_csv);
  }

  {
    CsvWriter bdc_csv({"seed", "t", "delta_t", "loss_diff_max",
                       "sigma_hat_t", "tau_hat_t"});
    Vec64 per_seed_max(n_seeds, 0.0);
    for (int s = 0; s < n_seeds; ++s) {
      const TwinRows& rows = swap_rows[s];
      append_twin_rows(bdc_csv, s, rows.steps);
      audit_growth(rows.steps, audit);
      for (double d : rows.probe_diffs) {
        per_seed_max[s] = std::max(per_seed_max[s], d);
      }
      theta_sup_auto = std::max(theta_sup_auto, rows.max_param_norm);
    }
    const double rho = mean(per_seed_max);
    result.rho = rho;
    add(result, "rho_hat", rho);
    add_seed_stats(result, "rho_hat", per_seed_max);
    write_csv(cfg, out_dir / (with_neighbor ? "bdc_steps.csv" : "twin_steps.csv"),
              bdc_csv);
  }

  add(result, "growth_audit_steps", std::to_string(audit.steps));
  add(result, "growth_audit_violations", std::to_string(audit.violations));
  add(result, "theta_sup_auto", 1.5 * theta_sup_auto);

  // Empirical profile of the configured loss over the standard bounded-logit
  // domain, ready to feed the bound calculators.
  {
    const double logit_bound = 10.0;
    const long profile_samples = 20000;
    RngStream profile_rng(cfg.data.seed, "loss-profile");
    const LossProfile profile =
        profile_loss(cfg.losses.front(), cfg.data.m, logit_bound,
                     profile_samples, profile_rng);
    add(result, "loss_profile.gamma_hat", profile.gamma_hat);
    add(result, "loss_profile.l_hat", profile.l_hat);
    add(result, "loss_profile.logit_bound", profile.logit_bound);
    add(result, "loss_profile.num_classes", std::to_string(profile.num_classes));
    add(result, "loss_profile.n_samples", std::to_string(profile.n_samples));
  }

  write_dataset_file(env.train, out_dir / "dataset.txt");
  if (with_neighbor && !neighbor_rows.empty()) {
    write_params_file(env.model, neighbor_rows.front().theta_final,
                      out_dir / "params_seed0.txt");
  }
  write_summary(cfg, out_dir, result);
  return result;
}

// ---------------------------------------------------------------------------
// bounds

Vec64 expand_schedule(const BoundsBlock& block) {
  if (!block.inputs.alpha_schedule.empty()) return block.inputs.alpha_schedule;
  Vec64 alphas(static_cast<std::size_t>(block.inputs.T));
  for (long t = 1; t <= block.inputs.T; ++t) {
    alphas[t - 1] = block.schedule.alpha_at(static_cast<int>(t));
  }
  return alphas;
}

ExperimentResult run_bounds_impl(const ExperimentConfig& cfg,
                                 const fs::path& out_dir) {
  ExperimentResult result;
  add(result, "kind", "bounds");
  const BoundsBlock& block = cfg.bounds;
  BoundInputs in = block.inputs;
  const std::string& which = block.bound;

  std::vector<BoundReport> reports;
  const bool want_all = which == "all";
  if (want_all || which == "adam_stability") {
    BoundReport r;
    r.bound = "adam_stability";
    std::tie(r.beta_bound, r.rho_bound) = adam_stability_bounds(in);
    reports.push_back(r);
  }
  if (want_all || which == "adam_gen") {
    BoundReport r;
    r.bound = "adam_gen";
    r.gen_error_bound = adam_generalization_bound(in);
    reports.push_back(r);
  }
  if (want_all || which == "adamw_stability" || which == "adamw_gen") {
    in.alpha_schedule = expand_schedule(block);
    if (want_all || which == "adamw_stability") {
      BoundReport r;
      r.bound = "adamw_stability";
      std::tie(r.beta_bound, r.rho_bound) = adamw_stability_bounds(in);
      reports.push_back(r);
    }
    if (want_all || which == "adamw_gen") {
      BoundReport r;
      r.bound = "adamw_gen";
      r.gen_error_bound = adamw_generalization_bound(in);
      reports.push_back(r);
    }
  }
  if (which == "combined") {
    BoundReport r;
    r.bound = "combined";
    r.beta_bound = block.beta_in;
    r.rho_bound = block.rho_in;
    r.gen_error_bound = generalization_from_constants(
        block.rho_in, block.beta_in, in.l_max, static_cast<double>(in.T),
        static_cast<double>(in.N), in.delta);
    reports.push_back(r);
  }
  for (const BoundReport& r : reports) {
    const bool has_constants = r.bound == "adam_stability" ||
                               r.bound == "adamw_stability" ||
                               r.bound == "combined";
    if (has_constants) {
      add(result, r.bound + ".beta_bound", r.beta_bound);
      add(result, r.bound + ".rho_bound", r.rho_bound);
    }
    if (r.bound == "adam_gen" || r.bound == "adamw_gen" ||
        r.bound == "combined") {
      add(result, r.bound + ".gen_error_bound", r.gen_error_bound);
    }
  }
  if (block.compare) {
    BoundInputs in_gjm = in;
    in_gjm.gamma = block.gamma_gjm;
    in_gjm.l_max = block.l_gjm;
    const bool adamw_flavor =
        which == "adamw_gen" || which == "adamw_stability";
    if (adamw_flavor) {
      in.alpha_schedule = expand_schedule(block);
      in_gjm.alpha_schedule = in.alpha_schedule;
    }
    const LossComparison cmp =
        compare_losses(in, in_gjm, adamw_flavor ? "adamw" : "adam");
    add(result, "compare.bound", cmp.bound);
    add(result, "compare.bound_kl", cmp.bound_kl);
    add(result, "compare.bound_gjm", cmp.bound_gjm);
    add(result, "compare.gjm_smaller", cmp.gjm_smaller ? "true" : "false");
    add(result, "compare.factor", cmp.factor);
  }
  add(result, "final_term_convention", "log(2/delta)");
  write_summary(cfg, out_dir, result);
  return result;
}

// Bad bound inputs come straight from the [bounds] block, so argument
// errors here are configuration errors.
ExperimentResult run_bounds(const ExperimentConfig& cfg,
                            const fs::path& out_dir) {
  try {
    return run_bounds_impl(cfg, out_dir);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
}

// ---------------------------------------------------------------------------
// genplot

struct CurvePoint {
  int seed = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

std::vector<CurvePoint> run_curves_for_loss(const ExperimentConfig& cfg,
                                            const ExperimentEnv& env,
                                            const LossSpec& loss,
                                            int threads) {
  const int n_seeds = cfg.run.n_seeds;
  const int epochs = cfg.run.epochs;
  const long T = static_cast<long>(epochs) * env.k;
  OptimizerConfig opt = cfg.optimizer.cfg;
  if (loss.kind == LossSpec::Kind::Gjm && cfg.optimizer.eta_gjm > 0.0) {
    opt.eta = cfg.optimizer.eta_gjm;
  }

  std::vector<std::vector<CurvePoint>> per_seed(n_seeds);
  parallel_for(n_seeds, threads, [&](int s) {
    RngStream r_rng(cfg.data.seed, "R/" + std::to_string(s));
    const BatchSequence seq =
        sample_sequence(env.k, static_cast<int>(T), r_rng);

    ParamVector theta = init_params(env.model);
    OptimizerState state = OptimizerState::zeros(theta.size());
    std::vector<CurvePoint>& points = per_seed[s];
    points.reserve(epochs);
    for (int t = 1; t <= T; ++t) {
      const std::vector<Sample> batch =
          gather(env.train, env.parts.batches[seq.indices[t - 1] - 1]);
      const GradVector g = loss_grad(env.model, theta, batch, loss);
      StepResult step = apply_rule(cfg.optimizer.rule, theta, state, g, opt,
                                   t, static_cast<int>(batch.size()));
      theta = std::move(step.theta);
      state = std::move(step.state);
      if (t % env.k == 0) {
        CurvePoint p;
        p.seed = s;
        p.epoch = t / env.k;
        p.train_loss = empirical_risk(env.model, theta, env.train, loss);
        p.val_loss = empirical_risk(env.model, theta, env.val, loss);
        points.push_back(p);
      }
    }
  });

  std::vector<CurvePoint> rows;
  rows.reserve(static_cast<std::size_t>(n_seeds) * epochs);
  for (const auto& seed_rows : per_seed) {
    rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
  }
  return rows;
}

ExperimentResult run_genplot(const ExperimentConfig& cfg,
                             const fs::path& out_dir, int threads) {
  const ExperimentEnv env = build_env(cfg, true);
  ExperimentResult result;
  add(result, "kind", "genplot");
  add(result, "rule", rule_name(cfg.optimizer.rule));
  add(result, "epochs", std::to_string(cfg.run.epochs));
  add(result, "n_seeds", std::to_string(cfg.run.n_seeds));

  Vec64 final_medians;
  for (const LossSpec& loss : cfg.losses) {
    const std::vector<CurvePoint> rows =
        run_curves_for_loss(cfg, env, loss, threads);
    CsvWriter csv({"seed", "epoch", "train_loss", "val_loss", "e_hat"});
    Vec64 finals;
    for (const CurvePoint& p : rows) {
      const double e_hat = std::abs(p.train_loss - p.val_loss);
      csv.add_row({std::to_string(p.seed), std::to_string(p.epoch),
                   format_double(p.train_loss), format_double(p.val_loss),
                   format_double(e_hat)});
      if (p.epoch == cfg.run.epochs) finals.push_back(e_hat);
    }
    write_csv(cfg, out_dir / (std::string("curves_") + loss.name() + ".csv"),
              csv);
    const double final_median = median(finals);
    final_medians.push_back(final_median);
    add(result, std::string("final_e_hat_median.") + loss.name(),
        final_median);
  }

  if (cfg.losses.size() == 2) {
    // When both losses run, report the directional comparison.
    int kl_idx = -1, gjm_idx = -1;
    for (std::size_t i = 0; i < cfg.losses.size(); ++i) {
      if (cfg.losses[i].kind == LossSpec::Kind::Kl) kl_idx = static_cast<int>(i);
      if (cfg.losses[i].kind == LossSpec::Kind::Gjm) gjm_idx = static_cast<int>(i);
    }
    if (kl_idx >= 0 && gjm_idx >= 0) {
      add(result, "final_e_hat_gjm_le_kl",
          final_medians[gjm_idx] <= final_medians[kl_idx] ? "true" : "false");
      add(result, "comparison", "directional (not numerical)");
      if (cfg.optimizer.eta_gjm > 0.0 &&
          cfg.optimizer.eta_gjm != cfg.optimizer.cfg.eta) {
        add(result, "comparison_caveat",
            "losses trained with different learning rates; the comparison "
            "is rate-confounded");
      }
    }
  }
  write_summary(cfg, out_dir, result);
  return result;
}

// ---------------------------------------------------------------------------
// genplot emission (series + chart)

struct Series {
  std::string loss;
  std::vector<CurvePoint> rows;  // e_hat recomputed on emission
  std::string preamble;          // '#' comment lines carried over
};

Series parse_curves_csv(const fs::path& path, const std::string& loss) {
  const std::string text = read_text_file(path);
  Series series;
  series.loss = loss;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      series.preamble += line + "\n";
      continue;
    }
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "seed,epoch,train_loss,val_loss,e_hat") {
        throw std::runtime_error(path.string() + ": unexpected header");
      }
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) {
      throw std::runtime_error(path.string() + ": malformed row");
    }
    CurvePoint p;
    p.seed = std::stoi(cells[0]);
    p.epoch = std::stoi(cells[1]);
    p.train_loss = parse_double(cells[2]);
    p.val_loss = parse_double(cells[3]);
    series.rows.push_back(p);
  }
  if (!header_seen) {
    throw std::runtime_error(path.string() + ": missing header");
  }
  return series;
}

std::vector<int> epoch_grid(const Series& s) {
  std::vector<int> grid;
  for (const CurvePoint& p : s.rows) grid.push_back(p.epoch);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::string render_chart_svg(const std::vector<Series>& all,
                             const std::string& config_comment) {
  constexpr int kW = 640, kH = 400;
  constexpr int kLeft = 60, kRight = 20, kTop = 30, kBottom = 45;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  // Median generalization gap per epoch, per loss.
  struct Line {
    std::string loss;
    std::vector<std::pair<double, double>> pts;  // (epoch, median e_hat)
  };
  std::vector<Line> lines;
  double x_max = 1.0, y_max = 0.0;
  for (const Series& s : all) {
    Line ln;
    ln.loss = s.loss;
    for (int epoch : epoch_grid(s)) {
      Vec64 vals;
      for (const CurvePoint& p : s.rows) {
        if (p.epoch == epoch) {
          vals.push_back(std::abs(p.train_loss - p.val_loss));
        }
      }
      const double med = median(vals);
      ln.pts.emplace_back(epoch, med);
      x_max = std::max(x_max, static_cast<double>(epoch));
      y_max = std::max(y_max, med);
    }
    lines.push_back(std::move(ln));
  }
  if (y_max <= 0.0) y_max = 1.0;

  auto sx = [&](double e) {
    return kLeft + (kW - kLeft - kRight) * (e / x_max);
  };
  auto sy = [&](double v) {
    return (kH - kBottom) - (kH - kTop - kBottom) * (v / y_max);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kW) + "\" height=\"" + std::to_string(kH) + "\">\n";
  svg += "<!--\n" + config_comment + "-->\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axes.
  svg += "<line x1=\"" + format_double(kLeft) + "\" y1=\"" +
         format_double(kH - kBottom) + "\" x2=\"" + format_double(kW - kRight) +
         "\" y2=\"" + format_double(kH - kBottom) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(kLeft) + "\" y1=\"" +
         format_double(kTop) + "\" x2=\"" + format_double(kLeft) + "\" y2=\"" +
         format_double(kH - kBottom) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + format_double(kW / 2.0) + "\" y=\"" +
         format_double(kH - 10.0) +
         "\" text-anchor=\"middle\" font-size=\"13\">epoch</text>\n";
  svg += "<text x=\"15\" y=\"" + format_double(kH / 2.0) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
         "15 " +
         format_double(kH / 2.0) +
         ")\">median generalization gap</text>\n";
  svg += "<text x=\"" + format_double(kLeft) + "\" y=\"" +
         format_double(kH - kBottom + 16.0) + "\" font-size=\"11\">0</text>\n";
  svg += "<text x=\"" + format_double(kW - kRight) + "\" y=\"" +
         format_double(kH - kBottom + 16.0) +
         "\" text-anchor=\"end\" font-size=\"11\">" + format_double(x_max) +
         "</text>\n";
  svg += "<text x=\"" + format_double(kLeft - 6.0) + "\" y=\"" +
         format_double(kTop + 4.0) +
         "\" text-anchor=\"end\" font-size=\"11\">" + format_double(y_max) +
         "</text>\n";

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Line& ln = lines[i];
    std::string pts;
    for (const auto& [e, v] : ln.pts) {
      if (!pts.empty()) pts += " ";
      pts += format_double(sx(e)) + "," + format_double(sy(v));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(colors[i % 4]) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    svg += "<text x=\"" + format_double(kW - kRight - 4.0) + "\" y=\"" +
           format_double(kTop + 14.0 + 16.0 * static_cast<double>(i)) +
           "\" text-anchor=\"end\" font-size=\"12\" fill=\"" +
           colors[i % 4] + "\">" + ln.loss + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

void genplot_emit(const fs::path& results_dir, const fs::path& out_dir) {
  std::vector<Series> all;
  for (const char* loss : {"kl", "gjm"}) {
    const fs::path path =
        results_dir / (std::string("curves_") + loss + ".csv");
    if (fs::exists(path)) {
      all.push_back(parse_curves_csv(path, loss));
    }
  }
  if (all.empty()) {
    throw std::runtime_error("genplot: no curves_<loss>.csv series under " +
                             results_dir.string());
  }
  const std::vector<int> grid = epoch_grid(all.front());
  for (const Series& s : all) {
    if (epoch_grid(s) != grid) {
      throw std::runtime_error("genplot: series epoch grids differ");
    }
  }
  fs::create_directories(out_dir);
  for (const Series& s : all) {
    CsvWriter csv({"seed", "epoch", "train_loss", "val_loss", "e_hat"});
    for (const CurvePoint& p : s.rows) {
      csv.add_row({std::to_string(p.seed), std::to_string(p.epoch),
                   format_double(p.train_loss), format_double(p.val_loss),
                   format_double(std::abs(p.train_loss - p.val_loss))});
    }
    write_text_atomic(out_dir / (std::string("series_") + s.loss + ".csv"),
                      s.preamble + csv.str());
  }
  write_text_atomic(out_dir / "chart.svg",
                    render_chart_svg(all, all.front().preamble));
}

// ---------------------------------------------------------------------------
// sweep

namespace {

void apply_swept_value(ExperimentConfig& cfg, const std::string& field,
                       double value) {
  auto as_int = [&](const char* what) {
    const long v = static_cast<long>(value);
    if (static_cast<double>(v) != value) {
      throw ConfigError(0, std::string("sweep value for ") + what +
                                " must be an integer");
    }
    return v;
  };
  if (field == "run.T") {
    cfg.run.T = as_int("run.T");
  } else if (field == "run.n_seeds") {
    cfg.run.n_seeds = static_cast<int>(as_int("run.n_seeds"));
  } else if (field == "run.probe_size") {
    cfg.run.probe_size = static_cast<int>(as_int("run.probe_size"));
  } else if (field == "run.b") {
    cfg.run.b = static_cast<int>(as_int("run.b"));
    cfg.run.k = 0;
  } else if (field == "run.k") {
    cfg.run.k = static_cast<int>(as_int("run.k"));
    cfg.run.b = 0;
  } else if (field == "data.n") {
    cfg.data.n = as_int("data.n");
  } else if (field == "data.sigma") {
    cfg.data.sigma = value;
  } else if (field == "data.label_noise") {
    cfg.data.label_noise = value;
  } else if (field == "optimizer.eta") {
    cfg.optimizer.cfg.eta = value;
  } else if (field == "optimizer.lambda") {
    cfg.optimizer.cfg.lambda = value;
  } else if (field == "optimizer.beta1") {
    cfg.optimizer.cfg.beta1 = value;
  } else if (field == "optimizer.beta2") {
    cfg.optimizer.cfg.beta2 = value;
  } else if (field == "optimizer.epsilon") {
    cfg.optimizer.cfg.epsilon = value;
  } else {
    throw ConfigError(0, "sweep.field '" + field +
                             "' is not a sweepable numeric field");
  }
}

}  // namespace

ExperimentResult run_sweep(const ExperimentConfig& cfg,
                           const fs::path& out_dir, int threads,
                           bool verbose) {
  cfg.validate();
  if (cfg.kind != ExperimentKind::Sweep) {
    throw ConfigError(0, "run_sweep: config kind must be sweep");
  }
  fs::create_directories(out_dir);

  CsvWriter csv({"value", "seed", "beta_hat"});
  Vec64 pooled_x, pooled_y, agg_x, agg_y;

  ExperimentResult result;
  add(result, "kind", "sweep");
  add(result, "field", cfg.sweep.field);

  for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
    const double value = cfg.sweep.values[i];
    ExperimentConfig sub = cfg;
    sub.kind = ExperimentKind::Stability;
    sub.sweep = SweepBlock{};
    apply_swept_value(sub, cfg.sweep.field, value);
    sub.validate();

    const fs::path sub_dir = out_dir / ("point_" + std::to_string(i));
    fs::create_directories(sub_dir);
    if (verbose) {
      std::cerr << "[sweep] " << cfg.sweep.field << " = "
                << format_double(value) << "\n";
    }
    const ExperimentResult sub_result =
        run_experiment(sub, sub_dir, threads, verbose);

    for (std::size_t s = 0; s < sub_result.per_seed_beta.size(); ++s) {
      csv.add_row({format_double(value), std::to_string(s),
                   format_double(sub_result.per_seed_beta[s])});
      pooled_x.push_back(value);
      pooled_y.push_back(sub_result.per_seed_beta[s]);
    }
    agg_x.push_back(value);
    agg_y.push_back(sub_result.beta);
    add(result, "beta_hat." + std::to_string(i) + "." + format_double(value),
        sub_result.beta);
  }

  if (cfg.sweep.values.size() < 2) {
    add(result, "spearman_rho", "undefined (single sweep point)");
    add(result, "spearman_rho_per_seed", "undefined (single sweep point)");
  } else {
    // Primary statistic: aggregated beta_hat against the swept value.
    add(result, "spearman_rho", spearman_rho(agg_x, agg_y));
    add(result, "spearman_rho_per_seed", spearman_rho(pooled_x, pooled_y));
  }
  write_csv(cfg, out_dir / "sweep.csv", csv);
  write_summary(cfg, out_dir, result);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const fs::path& out_dir, int threads,
                                bool verbose) {
  cfg.validate();
  fs::create_directories(out_dir);
  switch (cfg.kind) {
    case ExperimentKind::Gradcheck:
      return run_gradcheck(cfg, out_dir);
    case ExperimentKind::Stability:
      return run_stability(cfg, out_dir, threads, true);
    case ExperimentKind::Bdc:
      return run_stability(cfg, out_dir, threads, false);
    case ExperimentKind::Bounds:
      return run_bounds(cfg, out_dir);
    case ExperimentKind::Genplot:
      return run_genplot(cfg, out_dir, threads);
    case ExperimentKind::Sweep:
      return run_sweep(cfg, out_dir, threads, verbose);
  }
  throw std::logic_error("run_experiment: unreachable");
}

std::string render_bounds_text(const ExperimentResult& result) {
  // Display values at 12 significant digits; summary.txt keeps the exact
  // round-trip rendering.
  auto display = [](const std::string& v) -> std::string {
    try {
      const double d = parse_double(v);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.12g", d);
      return buf;
    } catch (const std::exception&) {
      return v;
    }
  };
  std::string out;
  std::size_t width = 0;
  for (const auto& [k, v] : result.summary) width = std::max(width, k.size());
  for (const auto& [k, v] : result.summary) {
    out += k;
    out += std::string(width - k.size() + 2, ' ');
    out += display(v);
    out += "\n";
  }
  return out;
}

}  // namespace optstab
