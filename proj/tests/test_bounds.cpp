#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "optstab/bounds.hpp"
#include "optstab/rng.hpp"

using namespace optstab;

namespace {

// Independent re-implementations with different algebraic groupings; the
// production formulas must agree with these to 1e-12 relative.
double alt_thm1_beta(const BoundInputs& in) {
  return 2.0 * in.eta * in.b * in.T * in.gamma * in.gamma / (in.c * in.N);
}

double alt_thm1_rho(const BoundInputs& in) {
  return 8.0 * in.eta * in.b * in.gamma * in.b * in.gamma /
         (in.c * in.N * in.N);
}

double alt_thm2(const BoundInputs& in) {
  const double lg = std::log(2.0) - std::log(in.delta);
  const double r = in.b * in.gamma / static_cast<double>(in.N);
  const double t1 = 4.0 * r * r * std::sqrt(in.T * lg);
  const double t2 = in.b * in.T * in.gamma * in.gamma /
                    static_cast<double>(in.N) *
                    (1.0 + std::sqrt(2.0 * in.N * lg));
  return 2.0 * in.eta / in.c * t1 + 2.0 * in.eta / in.c * t2 +
         in.l_max * std::sqrt(lg / 2.0 / in.N);
}

double alt_schedule_sum(const BoundInputs& in) {
  double s = 0.0;
  for (double a : in.alpha_schedule) s += a;
  return s;
}

double alt_thm3_beta(const BoundInputs& in) {
  const double w = in.eta * in.gamma * in.gamma / in.c +
                   in.gamma * in.lambda * in.theta_sup;
  return 2.0 * in.b * in.T * alt_schedule_sum(in) * w /
         static_cast<double>(in.N);
}

double alt_thm3_rho(const BoundInputs& in) {
  const double w = in.eta * in.gamma * in.gamma / in.c +
                   in.gamma * in.lambda * in.theta_sup;
  return 8.0 * in.b * in.b * alt_schedule_sum(in) * w /
         (static_cast<double>(in.N) * static_cast<double>(in.N));
}

double alt_thm4(const BoundInputs& in) {
  const double lg = std::log(2.0) - std::log(in.delta);
  const double w = in.eta * in.gamma * in.gamma / in.c +
                   in.gamma * in.lambda * in.theta_sup;
  const double paren = 4.0 * in.b * std::sqrt(in.T * lg) /
                           static_cast<double>(in.N) +
                       in.T * std::sqrt(2.0 * in.N * lg);
  return 2.0 * in.b * alt_schedule_sum(in) * w * paren /
             static_cast<double>(in.N) +
         in.l_max * std::sqrt(lg / 2.0 / in.N);
}

BoundInputs random_inputs(RngStream& rng, bool with_schedule) {
  BoundInputs in;
  in.gamma = std::exp(rng.uniform(-2.0, 6.0));
  in.l_max = std::exp(rng.uniform(-1.0, 4.0));
  in.eta = std::exp(rng.uniform(-12.0, -2.0));
  in.N = rng.uniform_int(10, 100000);
  in.b = rng.uniform_int(1, static_cast<int>(in.N) - 1);
  in.T = rng.uniform_int(1, 5000);
  in.delta = rng.uniform(0.001, 0.999);
  in.c = std::exp(rng.uniform(-20.0, -0.5));
  in.lambda = with_schedule ? rng.uniform(0.0, 0.9) : 0.0;
  in.theta_sup = std::exp(rng.uniform(-2.0, 3.0));
  if (with_schedule) {
    in.alpha_schedule.resize(in.T);
    for (double& a : in.alpha_schedule) a = rng.uniform(0.1, 1.0);
  }
  return in;
}

double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

BoundInputs example_inputs() {
  BoundInputs in;
  in.gamma = 1.0;
  in.l_max = 23.03;
  in.eta = 2e-5;
  in.b = 64;
  in.T = 100;
  in.N = 1000;
  in.delta = 0.05;
  in.c = 1e-8;
  return in;
}

}  // namespace

TEST_SUITE_BEGIN("bounds");

TEST_CASE("thm1 worked example") {
  const auto [beta, rho] = adam_stability_bounds(example_inputs());
  CHECK(beta == doctest::Approx(25600.0).epsilon(1e-12));
  CHECK(rho == doctest::Approx(65.536).epsilon(1e-12));
}

TEST_CASE("thm1 scalings are exact") {
  const BoundInputs base = example_inputs();
  const auto [beta1, rho1] = adam_stability_bounds(base);

  BoundInputs doubled_T = base;
  doubled_T.T *= 2;
  const auto [beta2, rho2] = adam_stability_bounds(doubled_T);
  CHECK(beta2 == 2.0 * beta1);
  CHECK(rho2 == rho1);

  BoundInputs doubled_gamma = base;
  doubled_gamma.gamma *= 2.0;
  const auto [beta4, rho4] = adam_stability_bounds(doubled_gamma);
  CHECK(beta4 == 4.0 * beta1);
  CHECK(rho4 == 4.0 * rho1);
}

TEST_CASE("thm1 rejects b >= N") {
  BoundInputs in = example_inputs();
  in.b = in.N;
  CHECK_THROWS_AS(adam_stability_bounds(in), std::invalid_argument);
  in.b = in.N + 5;
  CHECK_THROWS_AS(adam_stability_bounds(in), std::invalid_argument);
}

TEST_CASE("input validation") {
  BoundInputs in = example_inputs();
  in.delta = 1.0;
  CHECK_THROWS_AS(adam_generalization_bound(in), std::invalid_argument);
  in = example_inputs();
  in.c = 1.0;
  CHECK_THROWS_AS(adam_stability_bounds(in), std::invalid_argument);
  in = example_inputs();
  in.gamma = 0.0;
  CHECK_THROWS_AS(adam_stability_bounds(in), std::invalid_argument);
}

TEST_CASE("thm2 is monotone in gamma and L, finite as delta -> 1") {
  RngStream rng(81, "mono2");
  for (int i = 0; i < 200; ++i) {
    // Nondecreasing always; an increment can round away when other terms
    // dominate, so the random probes check >= and a balanced instance
    // checks strict growth below.
    const BoundInputs in = random_inputs(rng, false);
    BoundInputs hi = in;
    hi.gamma *= 1.5;
    CHECK(adam_generalization_bound(hi) >= adam_generalization_bound(in));
    hi = in;
    hi.l_max *= 1.5;
    CHECK(adam_generalization_bound(hi) >= adam_generalization_bound(in));
  }
  BoundInputs in = example_inputs();
  in.c = 0.5;  // keeps the gamma and L terms comparable
  BoundInputs hi = in;
  hi.gamma *= 1.5;
  CHECK(adam_generalization_bound(hi) > adam_generalization_bound(in));
  hi = in;
  hi.l_max *= 1.5;
  CHECK(adam_generalization_bound(hi) > adam_generalization_bound(in));

  in.delta = 0.999999;
  const double v = adam_generalization_bound(in);
  CHECK(std::isfinite(v));
  CHECK(v > 0.0);
}

TEST_CASE("dual-path agreement across 1000 random inputs") {
  RngStream rng(82, "dual");
  for (int i = 0; i < 1000; ++i) {
    const BoundInputs plain = random_inputs(rng, false);
    const auto [beta, rho] = adam_stability_bounds(plain);
    CHECK(rel_diff(beta, alt_thm1_beta(plain)) < 1e-12);
    CHECK(rel_diff(rho, alt_thm1_rho(plain)) < 1e-12);
    CHECK(rel_diff(adam_generalization_bound(plain), alt_thm2(plain)) < 1e-12);

    const BoundInputs sched = random_inputs(rng, true);
    const auto [beta3, rho3] = adamw_stability_bounds(sched);
    CHECK(rel_diff(beta3, alt_thm3_beta(sched)) < 1e-12);
    CHECK(rel_diff(rho3, alt_thm3_rho(sched)) < 1e-12);
    CHECK(rel_diff(adamw_generalization_bound(sched), alt_thm4(sched)) < 1e-12);
  }
}

TEST_CASE("thm3 reductions and linearity") {
  RngStream rng(83, "thm3");
  BoundInputs in = random_inputs(rng, true);
  in.lambda = 0.0;
  in.alpha_schedule.assign(in.T, 1.0);
  const auto [beta3, rho3] = adamw_stability_bounds(in);

  BoundInputs plain = in;
  plain.alpha_schedule.clear();
  const auto [beta1, unused_rho] = adam_stability_bounds(plain);
  CHECK(rel_diff(beta3, static_cast<double>(in.T) * beta1) < 1e-12);

  BoundInputs halved = in;
  halved.alpha_schedule.assign(in.T, 0.5);
  const auto [beta_h, rho_h] = adamw_stability_bounds(halved);
  CHECK(beta_h == 0.5 * beta3);
  CHECK(rho_h == 0.5 * rho3);

  // Affine dependence on theta_sup: the increment equals the linear term.
  BoundInputs with_decay = example_inputs();
  with_decay.lambda = 0.3;
  with_decay.theta_sup = 1.0;
  with_decay.alpha_schedule.assign(with_decay.T, 1.0);
  BoundInputs t2 = with_decay;
  t2.theta_sup = 2.0;
  const double b1 = adamw_stability_bounds(with_decay).first;
  const double b2 = adamw_stability_bounds(t2).first;
  const double predicted = 2.0 * with_decay.b * with_decay.T *
                           static_cast<double>(with_decay.T) *
                           with_decay.gamma * with_decay.lambda /
                           static_cast<double>(with_decay.N);
  CHECK(std::abs((b2 - b1) - predicted) <= 1e-9 * b2);
}

TEST_CASE("thm3 rejects schedule length mismatch") {
  BoundInputs in = example_inputs();
  in.alpha_schedule.assign(in.T - 1, 1.0);
  CHECK_THROWS_AS(adamw_stability_bounds(in), std::invalid_argument);
  in.alpha_schedule.assign(in.T, 1.5);
  CHECK_THROWS_AS(adamw_stability_bounds(in), std::invalid_argument);
}

TEST_CASE("thm4 is monotone in lambda and shares the L-term with thm2") {
  RngStream rng(84, "thm4");
  for (int i = 0; i < 100; ++i) {
    BoundInputs in = random_inputs(rng, true);
    BoundInputs hi = in;
    hi.lambda = in.lambda + 0.05;
    CHECK(adamw_generalization_bound(hi) >= adamw_generalization_bound(in));
  }
  BoundInputs balanced = example_inputs();
  balanced.c = 0.5;
  balanced.alpha_schedule.assign(balanced.T, 1.0);
  BoundInputs more_decay = balanced;
  more_decay.lambda = balanced.lambda + 0.05;
  CHECK(adamw_generalization_bound(more_decay) > adamw_generalization_bound(balanced));
  // With gamma driven to zero only the shared concentration term remains.
  BoundInputs tiny = example_inputs();
  tiny.gamma = 1e-150;
  tiny.lambda = 0.0;
  tiny.alpha_schedule.assign(tiny.T, 1.0);
  const double l_term = tiny.l_max * std::sqrt(std::log(2.0 / tiny.delta) /
                                               (2.0 * tiny.N));
  CHECK(rel_diff(adam_generalization_bound(tiny), l_term) < 1e-12);
  CHECK(rel_diff(adamw_generalization_bound(tiny), l_term) < 1e-12);
}

TEST_CASE("eq13 reduces to the concentration term and composes with thm1") {
  CHECK(generalization_from_constants(0.0, 0.0, 23.03, 100, 1000, 0.05) ==
        doctest::Approx(23.03 * std::sqrt(std::log(40.0) / 2000.0))
            .epsilon(1e-14));

  RngStream rng(85, "compose");
  for (int i = 0; i < 1000; ++i) {
    const BoundInputs in = random_inputs(rng, false);
    const auto [beta, rho] = adam_stability_bounds(in);
    const double composed =
        generalization_from_constants(rho, beta, in.l_max, static_cast<double>(in.T),
                     static_cast<double>(in.N), in.delta);
    CHECK(rel_diff(composed, adam_generalization_bound(in)) < 1e-12);
  }

  CHECK_THROWS_AS(generalization_from_constants(-1.0, 0.0, 1.0, 10, 100, 0.05),
                  std::invalid_argument);
  CHECK_THROWS_AS(generalization_from_constants(0.0, 0.0, 1.0, 10, 100, 1.5),
                  std::invalid_argument);
}

TEST_CASE("bound monotonicity in single fields") {
  RngStream rng(86, "monofield");
  for (int i = 0; i < 200; ++i) {
    const BoundInputs in = random_inputs(rng, false);
    BoundInputs up = in;
    up.eta *= 2.0;
    CHECK(adam_generalization_bound(up) >= adam_generalization_bound(in));
    up = in;
    up.T *= 2;
    CHECK(adam_generalization_bound(up) >= adam_generalization_bound(in));
    if (2 * in.b < in.N) {
      up = in;
      up.b *= 2;
      CHECK(adam_generalization_bound(up) >= adam_generalization_bound(in));
    }
    BoundInputs down = in;
    down.N *= 2;
    CHECK(adam_generalization_bound(down) <= adam_generalization_bound(in));
  }
  // Strict directions on a balanced instance.
  const BoundInputs in = example_inputs();
  BoundInputs up = in;
  up.eta *= 2.0;
  CHECK(adam_generalization_bound(up) > adam_generalization_bound(in));
  up = in;
  up.T *= 2;
  CHECK(adam_generalization_bound(up) > adam_generalization_bound(in));
  up = in;
  up.b *= 2;
  CHECK(adam_generalization_bound(up) > adam_generalization_bound(in));
  BoundInputs down = in;
  down.N *= 2;
  CHECK(adam_generalization_bound(down) < adam_generalization_bound(in));
}

TEST_CASE("compare_losses orders by the profile") {
  BoundInputs kl = example_inputs();
  kl.gamma = 4.0;
  kl.l_max = 23.0;
  BoundInputs gjm = kl;
  gjm.gamma = 1.0;
  gjm.l_max = 2.0;

  const LossComparison cmp = compare_losses(kl, gjm, "thm2");
  CHECK(cmp.gjm_smaller);
  CHECK(cmp.factor > 1.0);
  CHECK(cmp.bound_kl == adam_generalization_bound(kl));
  CHECK(cmp.bound_gjm == adam_generalization_bound(gjm));

  const LossComparison same = compare_losses(kl, kl, "thm2");
  CHECK(same.bound_kl == same.bound_gjm);
  CHECK_FALSE(same.gjm_smaller);

  BoundInputs other = gjm;
  other.eta *= 2.0;
  CHECK_THROWS_AS(compare_losses(kl, other, "thm2"), std::invalid_argument);
  CHECK_THROWS_AS(compare_losses(kl, gjm, "thm9"), std::invalid_argument);

  kl.lambda = 0.1;
  gjm.lambda = 0.1;
  kl.alpha_schedule.assign(kl.T, 1.0);
  gjm.alpha_schedule.assign(gjm.T, 1.0);
  const LossComparison cmp4 = compare_losses(kl, gjm, "thm4");
  CHECK(cmp4.gjm_smaller);
}

TEST_SUITE_END();
