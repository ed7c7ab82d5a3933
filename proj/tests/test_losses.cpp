#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "optstab/grad_check.hpp"
#include "optstab/losses.hpp"
#include "optstab/models.hpp"

using namespace optstab;

namespace {

// Random pair away from the KL clamp (logit bound keeps probabilities
// comfortably above 1e-10).
SimplexPair interior_pair(int m, RngStream& rng) {
  Vec64 za(m), zb(m);
  for (double& z : za) z = rng.uniform(-6.0, 6.0);
  for (double& z : zb) z = rng.uniform(-6.0, 6.0);
  return {LabelDistribution{softmax(za)}, LabelDistribution{softmax(zb)}};
}

double hellinger_form(const LabelDistribution& yhat,
                      const LabelDistribution& y) {
  long double sum = 0.0L;
  for (int m = 0; m < y.size(); ++m) {
    const long double d = sqrtl(y.probs[m]) - sqrtl(yhat.probs[m]);
    sum += d * d;
  }
  return static_cast<double>(sum);
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("kl loss identity and series value") {
  const LabelDistribution y{{0.5, 0.5}};
  CHECK(kl_loss(y, y, 1e-10) == 0.0);

  const LabelDistribution yhat{{0.25, 0.75}};
  const long double expected =
      0.5L * logl(0.5L / 0.25L) + 0.5L * logl(0.5L / 0.75L);
  CHECK(kl_loss(yhat, y, 1e-10) ==
        doctest::Approx(static_cast<double>(expected)).epsilon(1e-14));
}

TEST_CASE("kl clamp keeps zero predictions finite") {
  const LabelDistribution y{{0.5, 0.5}};
  const LabelDistribution yhat{{0.0, 1.0}};  // raw construction on purpose
  const double v = kl_loss(yhat, y, 1e-10);
  CHECK(std::isfinite(v));
  const long double expected =
      0.5L * logl(0.5L / 1e-10L) + 0.5L * logl(0.5L / 1.0L);
  CHECK(v == doctest::Approx(static_cast<double>(expected)).epsilon(1e-13));
}

TEST_CASE("kl rejects bad arguments") {
  const LabelDistribution y{{0.5, 0.5}};
  const LabelDistribution y3{{0.2, 0.3, 0.5}};
  CHECK_THROWS_AS(kl_loss(y3, y, 1e-10), std::invalid_argument);
  CHECK_THROWS_AS(kl_loss(y, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(kl_grad(y3, y, 1e-10), std::invalid_argument);
}

TEST_CASE("kl gradient at the target is -1 per coordinate") {
  const LabelDistribution y{{0.3, 0.45, 0.25}};
  for (double g : kl_grad(y, y, 1e-10)) CHECK(g == -1.0);
}

TEST_CASE("kl gradient is zero on clamped coordinates") {
  const LabelDistribution y{{0.5, 0.5}};
  const LabelDistribution yhat{{0.0, 1.0}};
  const Vec64 g = kl_grad(yhat, y, 1e-10);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("kl gradient matches finite differences away from the clamp") {
  RngStream rng(21, "kl-fd");
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const auto [yhat, y] = interior_pair(4, rng);
    // Step well below the smallest coordinate keeps truncation error tiny.
    const double h =
        1e-4 * *std::min_element(yhat.probs.begin(), yhat.probs.end());
    const Vec64 analytic = kl_grad(yhat, y, 1e-10);
    const Vec64 numeric = finite_diff_grad(
        [&](const Vec64& q) {
          return kl_loss(LabelDistribution{q}, y, 1e-10);
        },
        yhat.probs, h);
    double scale = 0.0, diff = 0.0;
    for (std::size_t j = 0; j < analytic.size(); ++j) {
      diff = std::max(diff, std::abs(analytic[j] - numeric[j]));
      scale = std::max({scale, std::abs(analytic[j]), std::abs(numeric[j])});
    }
    worst = std::max(worst, diff / scale);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("gjm loss identity, algebraic form and value") {
  const LabelDistribution y{{0.5, 0.5}};
  CHECK(gjm_loss(y, y, 0.5) == 0.0);

  const LabelDistribution yhat{{0.25, 0.75}};
  CHECK(gjm_loss(yhat, y, 0.5) ==
        doctest::Approx(hellinger_form(yhat, y)).epsilon(1e-13));
}

TEST_CASE("gjm alpha=0.5 identity over random pairs") {
  RngStream rng(22, "gjm-identity");
  for (int i = 0; i < 10000; ++i) {
    const auto [yhat, y] = sample_simplex_pair(5, 8.0, rng);
    const double direct = gjm_loss(yhat, y, 0.5);
    CHECK(std::abs(direct - hellinger_form(yhat, y)) < 1e-12);
  }
}

TEST_CASE("gjm rejects bad arguments") {
  const LabelDistribution y{{0.5, 0.5}};
  const LabelDistribution y3{{0.2, 0.3, 0.5}};
  CHECK_THROWS_AS(gjm_loss(y3, y, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(gjm_loss(y, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gjm_loss(y, y, 1.5), std::invalid_argument);
  const LabelDistribution zero_target{{1.0, 0.0}};
  CHECK_THROWS_AS(gjm_loss(y, zero_target, 0.5), std::invalid_argument);
  const LabelDistribution zero_pred{{0.0, 1.0}};
  CHECK_THROWS_AS(gjm_grad(zero_pred, y, 0.5), std::domain_error);
}

TEST_CASE("gjm gradient closed form at alpha=0.5") {
  const LabelDistribution y{{0.5, 0.5}};
  const LabelDistribution yhat{{0.125, 0.875}};
  const Vec64 g = gjm_grad(yhat, y, 0.5);
  CHECK(g[0] == doctest::Approx(1.0 - std::sqrt(4.0)).epsilon(1e-13));
  CHECK(g[1] ==
        doctest::Approx(1.0 - std::sqrt(4.0 / 7.0)).epsilon(1e-13));

  const Vec64 gz = gjm_grad(y, y, 0.5);
  for (double v : gz) CHECK(v == 0.0);
}

TEST_CASE("gjm gradient matches finite differences") {
  RngStream rng(23, "gjm-fd");
  for (double alpha : {0.5, 0.8, 1.0}) {
    double worst = 0.0;
    for (int i = 0; i < 300; ++i) {
      const auto [yhat, y] = interior_pair(4, rng);
      const double h =
          1e-4 * *std::min_element(yhat.probs.begin(), yhat.probs.end());
      const Vec64 analytic = gjm_grad(yhat, y, alpha);
      const Vec64 numeric = finite_diff_grad(
          [&](const Vec64& q) {
            return gjm_loss(LabelDistribution{q}, y, alpha);
          },
          yhat.probs, h);
      double scale = 0.0, diff = 0.0;
      for (std::size_t j = 0; j < analytic.size(); ++j) {
        diff = std::max(diff, std::abs(analytic[j] - numeric[j]));
        scale = std::max({scale, std::abs(analytic[j]), std::abs(numeric[j])});
      }
      worst = std::max(worst, diff / scale);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("losses are nonnegative and vanish only at the target") {
  RngStream rng(24, "nonneg");
  for (int i = 0; i < 10000; ++i) {
    const auto [yhat, y] = sample_simplex_pair(6, 10.0, rng);
    CHECK(kl_loss(yhat, y, 1e-10) >= -1e-9);  // clamp can shave epsilon
    CHECK(gjm_loss(yhat, y, 0.5) >= 0.0);
  }
}

TEST_CASE("losses are convex along random segments") {
  RngStream rng(25, "convex");
  for (int i = 0; i < 1000; ++i) {
    const auto [y1, y] = interior_pair(5, rng);
    const auto [y2, unused] = interior_pair(5, rng);
    const double t = rng.uniform(0.05, 0.95);
    Vec64 mixed(5);
    for (int m = 0; m < 5; ++m) {
      mixed[m] = t * y1.probs[m] + (1.0 - t) * y2.probs[m];
    }
    const LabelDistribution ym{mixed};
    CHECK(kl_loss(ym, y, 1e-10) <=
          t * kl_loss(y1, y, 1e-10) + (1.0 - t) * kl_loss(y2, y, 1e-10) +
              1e-10);
    CHECK(gjm_loss(ym, y, 0.5) <=
          t * gjm_loss(y1, y, 0.5) + (1.0 - t) * gjm_loss(y2, y, 0.5) +
              1e-10);
  }
}

TEST_CASE("batch losses reduce to pointwise means") {
  const ModelSpec spec = ModelSpec::linear(3, 4, 5);
  const ParamVector theta = init_params(spec);
  RngStream rng(26, "batch");
  std::vector<Sample> batch(4);
  for (Sample& s : batch) {
    s.x = rng.normal_vec(3);
    const double nrm = l2_norm(s.x);
    if (nrm > 1.0) {
      for (double& v : s.x) v /= nrm;
    }
    s.true_label = rng.uniform_int(1, 4);
    s.y = make_label_distribution(s.true_label, 4, 1.5);
  }
  const LossSpec loss = LossSpec::kl();

  const double single = batch_loss(spec, theta, {batch.data(), 1}, loss);
  CHECK(single == doctest::Approx(loss_value(
                      loss, forward(spec, theta, batch[0].x), batch[0].y))
                      .epsilon(1e-15));

  std::vector<Sample> twice = {batch[0], batch[0]};
  CHECK(batch_loss(spec, theta, twice, loss) ==
        doctest::Approx(single).epsilon(1e-15));

  double mean4 = 0.0;
  for (const Sample& s : batch) {
    mean4 += loss_value(loss, forward(spec, theta, s.x), s.y) / 4.0;
  }
  CHECK(batch_loss(spec, theta, batch, loss) ==
        doctest::Approx(mean4).epsilon(1e-12));

  CHECK_THROWS_AS(batch_loss(spec, theta, {}, loss), std::invalid_argument);
}

TEST_CASE("regularized batch loss adds the scaled penalty") {
  const ModelSpec spec = ModelSpec::linear(3, 4, 6);
  RngStream rng(27, "regbatch");
  std::vector<Sample> batch(2);
  for (Sample& s : batch) {
    s.x = rng.normal_vec(3);
    s.true_label = rng.uniform_int(1, 4);
    s.y = make_label_distribution(s.true_label, 4, 1.5);
  }
  const LossSpec loss = LossSpec::gjm();

  const ParamVector theta = init_params(spec);
  const double base = batch_loss(spec, theta, batch, loss);
  CHECK(regularized_batch_loss(spec, theta, batch, loss, 0.0) ==
        doctest::Approx(base).epsilon(1e-15));

  const ParamVector zeros(theta.size(), 0.0);
  CHECK(regularized_batch_loss(spec, zeros, batch, loss, 3.7) ==
        doctest::Approx(batch_loss(spec, zeros, batch, loss)).epsilon(1e-15));

  const double nrm = l2_norm(theta);
  CHECK(regularized_batch_loss(spec, theta, batch, loss, 0.1) ==
        doctest::Approx(base + 0.05 * nrm * nrm / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(regularized_batch_loss(spec, theta, batch, loss, -1.0),
                  std::invalid_argument);
}

TEST_CASE("gradient-norm probe is zero when predictions equal targets") {
  RngStream rng(28, "pairs");
  std::vector<SimplexPair> pairs;
  for (int i = 0; i < 20; ++i) {
    const auto [yhat, y] = interior_pair(4, rng);
    pairs.emplace_back(y, y);  // identical on purpose
  }
  CHECK(max_grad_norm_over_pairs(LossSpec::gjm(0.5), pairs) == 0.0);
}

TEST_CASE("profile ordering: gjm below kl on shared draws") {
  const long n = 20000;
  RngStream rng_kl(29, "profile");
  RngStream rng_gjm(29, "profile");
  const LossProfile kl = profile_loss(LossSpec::kl(), 10, 10.0, n, rng_kl);
  const LossProfile gjm = profile_loss(LossSpec::gjm(0.5), 10, 10.0, n, rng_gjm);
  CHECK(gjm.gamma_hat < kl.gamma_hat);
  CHECK(gjm.l_hat < kl.l_hat);
  CHECK(gjm.l_hat <= 2.0 + 1e-12);           // Hellinger-form ceiling
  CHECK(kl.l_hat <= std::log(1e10) + 1e-9);  // clamp-limited worst case
}

TEST_CASE("lipschitz estimate is prefix-monotone in the sample count") {
  RngStream a(30, "prefix");
  RngStream b(30, "prefix");
  const double g1 = estimate_lipschitz(LossSpec::kl(), 5, 6.0, 1000, a);
  const double g2 = estimate_lipschitz(LossSpec::kl(), 5, 6.0, 5000, b);
  CHECK(g2 >= g1);
}

TEST_CASE("lipschitz estimate approaches a dense-grid oracle") {
  // M = 2 logits are shift-invariant, so the softmax image of the box is
  // exactly parameterized by the logit difference in [-2B, 2B].
  const double bound = 3.0;
  const auto from_diff = [](double d) {
    return LabelDistribution{softmax(Vec64{0.5 * d, -0.5 * d})};
  };
  double grid_kl = 0.0, grid_gjm = 0.0;
  const int steps = 1200;
  for (int i = 0; i <= steps; ++i) {
    const double da = -2.0 * bound + 4.0 * bound * i / steps;
    const LabelDistribution yhat = from_diff(da);
    for (int j = 0; j <= steps; ++j) {
      const double db = -2.0 * bound + 4.0 * bound * j / steps;
      const LabelDistribution y = from_diff(db);
      grid_kl = std::max(grid_kl, l2_norm(kl_grad(yhat, y, 1e-10)));
      grid_gjm = std::max(grid_gjm, l2_norm(gjm_grad(yhat, y, 0.5)));
    }
  }
  RngStream rng1(31, "grid");
  RngStream rng2(31, "grid");
  const double est_kl = estimate_lipschitz(LossSpec::kl(), 2, bound, 100000, rng1);
  const double est_gjm =
      estimate_lipschitz(LossSpec::gjm(0.5), 2, bound, 100000, rng2);
  CHECK(std::abs(est_kl - grid_kl) / grid_kl < 0.05);
  CHECK(std::abs(est_gjm - grid_gjm) / grid_gjm < 0.05);
}

TEST_SUITE_END();
