#include <benchmark/benchmark.h>

#include "optstab/models.hpp"
#include "optstab/optimizers.hpp"
#include "optstab/stability.hpp"

namespace {

using namespace optstab;

Dataset bench_dataset(int n, int d, int m) {
  RngStream rng(17, "bench");
  return gen_synthetic_dataset(n, d, m, 2.0, rng);
}

void BM_Softmax(benchmark::State& state) {
  RngStream rng(1, "softmax");
  const Vec64 logits = rng.normal_vec(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax(logits));
  }
}
BENCHMARK(BM_Softmax)->Arg(10)->Arg(100);

void BM_KlLossGrad(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  RngStream rng(2, "kl");
  const SimplexPair pair = sample_simplex_pair(m, 5.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kl_grad(pair.first, pair.second, 1e-10));
  }
}
BENCHMARK(BM_KlLossGrad)->Arg(10)->Arg(100);

void BM_BatchGrad(benchmark::State& state) {
  const Dataset ds = bench_dataset(64, 8, 10);
  const ModelSpec spec = ModelSpec::linear(8, 10, 3);
  const ParamVector theta = init_params(spec);
  const LossSpec loss = LossSpec::kl();
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_grad(spec, theta, ds.samples, loss));
  }
}
BENCHMARK(BM_BatchGrad);

void BM_AdamStep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  RngStream rng(4, "adam");
  const ParamVector theta = rng.normal_vec(n);
  const GradVector g = rng.normal_vec(n);
  const OptimizerConfig cfg;
  OptimizerState st = OptimizerState::zeros(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(adam_step(theta, st, g, cfg));
  }
}
BENCHMARK(BM_AdamStep)->Arg(100)->Arg(10000);

void BM_TwinTrain(benchmark::State& state) {
  const Dataset ds = bench_dataset(200, 8, 10);
  RngStream part_rng(5, "partition");
  const Partition parts = partition(ds, 10, part_rng);

  TrainRun a;
  a.model = ModelSpec::linear(8, 10, 7);
  a.dataset = ds;
  a.parts = parts;
  RngStream r_rng(6, "R");
  a.seq = sample_sequence(10, 50, r_rng);
  a.rule = UpdateRule::Adam;
  a.opt.lambda = 0.0;
  a.loss = LossSpec::kl();

  TrainRun b = a;
  RngStream n_rng(8, "neighbor");
  auto [pb, dsb] = neighbor_partition(parts, ds, 1, n_rng);
  b.parts = pb;
  b.dataset = dsb;

  for (auto _ : state) {
    benchmark::DoNotOptimize(twin_train(a, b));
  }
}
BENCHMARK(BM_TwinTrain);

}  // namespace

BENCHMARK_MAIN();
