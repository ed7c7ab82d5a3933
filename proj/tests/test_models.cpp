#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "optstab/grad_check.hpp"
#include "optstab/models.hpp"

using namespace optstab;

namespace {

Sample random_sample(int d, int m, double sigma, RngStream& rng) {
  Sample s;
  s.x = rng.normal_vec(static_cast<std::size_t>(d));
  const double nrm = l2_norm(s.x);
  if (nrm > 1.0) {
    for (double& v : s.x) v /= nrm;
  }
  s.true_label = rng.uniform_int(1, m);
  s.y = make_label_distribution(s.true_label, m, sigma);
  return s;
}

double inf_rel_err(const Vec64& a, const Vec64& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("parameter layout arithmetic") {
  CHECK(ModelSpec::linear(3, 4, 0).param_count() == 16);
  CHECK(ModelSpec::mlp(2, 5, 3, 0).param_count() == 33);
  CHECK_THROWS_AS(ModelSpec::mlp(2, 0, 3, 0), std::invalid_argument);
}

TEST_CASE("init is deterministic and sized to the spec") {
  const ModelSpec spec = ModelSpec::mlp(4, 7, 5, 99);
  const ParamVector a = init_params(spec);
  const ParamVector b = init_params(spec);
  CHECK(a == b);
  CHECK(static_cast<int>(a.size()) == spec.param_count());

  const ModelSpec other = ModelSpec::mlp(4, 7, 5, 100);
  CHECK(init_params(other) != a);
}

TEST_CASE("zero parameters give the uniform output") {
  const ModelSpec spec = ModelSpec::linear(3, 4, 0);
  const ParamVector zeros(spec.param_count(), 0.0);
  const LabelDistribution y = forward(spec, zeros, Vec64{0.3, -0.2, 0.9});
  for (double p : y.probs) CHECK(p == 0.25);
}

TEST_CASE("forward output lies on the simplex") {
  RngStream rng(41, "fwd");
  const ModelSpec spec = ModelSpec::mlp(4, 6, 5, 3);
  const ParamVector theta = init_params(spec);
  for (int i = 0; i < 100; ++i) {
    const Vec64 x = rng.normal_vec(4);
    const LabelDistribution y = forward(spec, theta, x);
    double sum = 0.0;
    for (double p : y.probs) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("forward matches a hand computation for 2x2 weights") {
  // W = [[1,2],[3,4]] row-major, bias = [0.5, -0.5], x = [1, 0].
  const ModelSpec spec = ModelSpec::linear(2, 2, 0);
  const ParamVector theta{1, 2, 3, 4, 0.5, -0.5};
  const LabelDistribution y = forward(spec, theta, Vec64{1, 0});
  const long double z0 = 1.5L, z1 = 2.5L;
  const long double e0 = expl(z0 - z1);
  const long double p0 = e0 / (e0 + 1.0L);
  CHECK(y.probs[0] ==
        doctest::Approx(static_cast<double>(p0)).epsilon(1e-14));
  CHECK(y.probs[1] ==
        doctest::Approx(static_cast<double>(1.0L - p0)).epsilon(1e-14));
}

TEST_CASE("forward rejects shape mismatches") {
  const ModelSpec spec = ModelSpec::linear(3, 4, 0);
  const ParamVector theta = init_params(spec);
  CHECK_THROWS_AS(forward(spec, theta, Vec64{1, 2}), std::invalid_argument);
  const ParamVector bad(7, 0.0);
  CHECK_THROWS_AS(forward(spec, bad, Vec64{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("backprop matches finite differences across specs and losses") {
  RngStream rng(42, "gradcheck");
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = rng.uniform_int(2, 5);
    const int m = rng.uniform_int(2, 5);
    const bool mlp = trial % 2 == 1;
    const ModelSpec spec =
        mlp ? ModelSpec::mlp(d, rng.uniform_int(2, 4), m, 1000 + trial)
            : ModelSpec::linear(d, m, 1000 + trial);
    const LossSpec loss =
        (trial / 2) % 2 == 0 ? LossSpec::kl() : LossSpec::gjm(0.5);

    ParamVector theta = rng.normal_vec(
        static_cast<std::size_t>(spec.param_count()));
    for (double& w : theta) w *= 0.4;
    std::vector<Sample> batch(rng.uniform_int(1, 4));
    for (Sample& s : batch) s = random_sample(d, m, 1.5, rng);

    const GradVector analytic = loss_grad(spec, theta, batch, loss);
    const Vec64 numeric = finite_diff_grad(
        [&](const Vec64& th) { return batch_loss(spec, th, batch, loss); },
        theta, 1e-5);
    worst = std::max(worst, inf_rel_err(analytic, numeric));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("gradient vanishes at a constructed minimum") {
  // Zero inputs and logits equal to log-target make the output hit the
  // target exactly, for every sample in the batch.
  const int m = 4;
  const LabelDistribution target = make_label_distribution(2, m, 1.0);
  ModelSpec spec = ModelSpec::linear(3, m, 0);
  ParamVector theta(spec.param_count(), 0.0);
  for (int i = 0; i < m; ++i) {
    theta[3 * m + i] = std::log(target.probs[i]);
  }
  std::vector<Sample> batch(3);
  for (Sample& s : batch) {
    s.x = Vec64{0, 0, 0};
    s.true_label = 2;
    s.y = target;
  }
  for (const LossSpec& loss : {LossSpec::kl(), LossSpec::gjm(0.5)}) {
    const GradVector g = loss_grad(spec, theta, batch, loss);
    CHECK(l2_norm(g) < 1e-6);
  }
}

TEST_CASE("batch gradient is the mean of pointwise gradients") {
  RngStream rng(43, "mean");
  const ModelSpec spec = ModelSpec::linear(3, 4, 5);
  const ParamVector theta = init_params(spec);
  const LossSpec loss = LossSpec::kl();
  std::vector<Sample> batch = {random_sample(3, 4, 1.5, rng),
                               random_sample(3, 4, 1.5, rng)};
  const GradVector both = loss_grad(spec, theta, batch, loss);
  const GradVector g0 = loss_grad(spec, theta, {batch.data(), 1}, loss);
  const GradVector g1 = loss_grad(spec, theta, {batch.data() + 1, 1}, loss);
  for (std::size_t i = 0; i < both.size(); ++i) {
    CHECK(both[i] ==
          doctest::Approx(0.5 * (g0[i] + g1[i])).epsilon(1e-12));
  }
}

TEST_CASE("param_distance basics") {
  const ParamVector a{1, 2, 3};
  CHECK(param_distance(a, a) == 0.0);
  const ParamVector b{4, 6, 3};
  CHECK(param_distance(a, b) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(param_distance(a, b) == param_distance(b, a));
  CHECK_THROWS_AS(param_distance(a, ParamVector{1, 2}),
                  std::invalid_argument);
}

TEST_CASE("batch loss is convex in theta for linear-softmax with kl") {
  RngStream rng(44, "convex");
  const ModelSpec spec = ModelSpec::linear(3, 4, 8);
  const LossSpec loss = LossSpec::kl();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Sample> batch(3);
    for (Sample& s : batch) s = random_sample(3, 4, 1.5, rng);
    ParamVector ta = rng.normal_vec(static_cast<std::size_t>(spec.param_count()));
    ParamVector tb = rng.normal_vec(static_cast<std::size_t>(spec.param_count()));
    for (double& w : ta) w *= 0.5;
    for (double& w : tb) w *= 0.5;
    ParamVector mid(ta.size());
    for (std::size_t i = 0; i < ta.size(); ++i) mid[i] = 0.5 * (ta[i] + tb[i]);
    CHECK(batch_loss(spec, mid, batch, loss) <=
          0.5 * batch_loss(spec, ta, batch, loss) +
              0.5 * batch_loss(spec, tb, batch, loss) + 1e-10);
  }
}

TEST_SUITE_END();
