#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "optstab/grad_check.hpp"
#include "optstab/rng.hpp"
#include "optstab/stats.hpp"
#include "optstab/vec.hpp"

using namespace optstab;

TEST_SUITE_BEGIN("core");

TEST_CASE("l2_norm basics") {
  CHECK(l2_norm(Vec64{0, 0, 0}) == 0.0);
  CHECK(l2_norm(Vec64{3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(l2_norm(Vec64{1, 1, 1, 1}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(l2_norm(Vec64{}), std::invalid_argument);
}

TEST_CASE("l2_norm absolute homogeneity") {
  RngStream rng(11, "norm-scale");
  for (int i = 0; i < 100; ++i) {
    const Vec64 v = rng.normal_vec(1 + static_cast<std::size_t>(
                                           rng.uniform_int(0, 19)));
    const double a = rng.uniform(-5.0, 5.0);
    Vec64 scaled = v;
    for (double& x : scaled) x *= a;
    CHECK(l2_norm(scaled) ==
          doctest::Approx(std::abs(a) * l2_norm(v)).epsilon(1e-12));
  }
}

TEST_CASE("softmax uniform on equal logits") {
  const Vec64 p = softmax(Vec64{0, 0, 0});
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax sums to one on random logits") {
  RngStream rng(12, "softmax-sum");
  for (int i = 0; i < 1000; ++i) {
    Vec64 logits(1 + rng.uniform_int(0, 11));
    for (double& z : logits) z = rng.uniform(-30.0, 30.0);
    const Vec64 p = softmax(logits);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x > 0.0);
      CHECK(x < 1.0 + 1e-15);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax shift invariance") {
  RngStream rng(13, "softmax-shift");
  for (int i = 0; i < 200; ++i) {
    Vec64 logits(3 + rng.uniform_int(0, 5));
    for (double& z : logits) z = rng.uniform(-10.0, 10.0);
    const double c = rng.uniform(-50.0, 50.0);
    Vec64 shifted = logits;
    for (double& z : shifted) z += c;
    const Vec64 a = softmax(logits);
    const Vec64 b = softmax(shifted);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax against extended-precision oracle") {
  const Vec64 p = softmax(Vec64{1, 2, 3});
  long double sum = 0.0L;
  long double ex[3];
  for (int i = 0; i < 3; ++i) {
    ex[i] = expl(static_cast<long double>(i + 1) - 3.0L);
    sum += ex[i];
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(p[i] ==
          doctest::Approx(static_cast<double>(ex[i] / sum)).epsilon(1e-14));
  }
}

TEST_CASE("softmax rejects non-finite input") {
  CHECK_THROWS_AS(softmax(Vec64{1.0, std::nan("")}), std::invalid_argument);
}

TEST_CASE("finite_diff_grad on named examples") {
  const auto quad = [](const Vec64& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  const Vec64 g = finite_diff_grad(quad, Vec64{1, 2}, 1e-5);
  CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-9));

  const Vec64 gz =
      finite_diff_grad([](const Vec64&) { return 7.5; }, Vec64{1, 2, 3}, 1e-5);
  for (double v : gz) CHECK(v == 0.0);

  const Vec64 gp = finite_diff_grad(
      [](const Vec64& x) { return x[0] * x[1]; }, Vec64{3, 5}, 1e-5);
  CHECK(gp[0] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(gp[1] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("finite_diff_grad matches analytic gradients of quadratics") {
  RngStream rng(14, "fd-quad");
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 5));
    const Vec64 a = rng.normal_vec(n);
    const Vec64 x = rng.normal_vec(n);
    const auto f = [&](const Vec64& v) {
      double s = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) s += a[j] * v[j] * v[j];
      return s;
    };
    const Vec64 g = finite_diff_grad(f, x, 1e-5);
    for (std::size_t j = 0; j < n; ++j) {
      const double exact = 2.0 * a[j] * x[j];
      CHECK(std::abs(g[j] - exact) <= std::max(1.0, std::abs(exact)) * 1e-6);
    }
  }
}

TEST_CASE("finite_diff_grad error paths") {
  const auto f = [](const Vec64& x) { return x[0]; };
  CHECK_THROWS_AS(finite_diff_grad(f, Vec64{1}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(finite_diff_grad(
                      [](const Vec64&) { return std::nan(""); }, Vec64{1},
                      1e-5),
                  std::domain_error);
}

TEST_CASE("rng streams are reproducible and label-separated") {
  RngStream a(42, "alpha");
  RngStream b(42, "alpha");
  RngStream c(42, "beta");
  bool all_equal = true;
  bool any_diff_from_c = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t xa = a.next_u64();
    all_equal = all_equal && (xa == b.next_u64());
    any_diff_from_c = any_diff_from_c || (xa != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff_from_c);

  RngStream d(42, "alpha");
  RngStream e = d.fork("sub");
  CHECK(e.label() == "alpha/sub");
  RngStream f(42, "alpha/sub");
  CHECK(e.next_u64() == f.next_u64());
}

TEST_CASE("rng draw helpers stay in range") {
  RngStream rng(7, "ranges");
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const int k = rng.uniform_int(3, 9);
    CHECK(k >= 3);
    CHECK(k <= 9);
  }
  // Normal draws should be finite and roughly centered.
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double z = rng.normal();
    CHECK(std::isfinite(z));
    sum += z;
  }
  CHECK(std::abs(sum / 10000.0) < 0.05);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman_rho(Vec64{1, 2, 3, 4}, Vec64{10, 20, 30, 40}) ==
        doctest::Approx(1.0));
  CHECK(spearman_rho(Vec64{1, 2, 3, 4}, Vec64{9, 7, 5, 3}) ==
        doctest::Approx(-1.0));
  // Monotone but nonlinear is still rank-perfect.
  CHECK(spearman_rho(Vec64{1, 2, 3, 4}, Vec64{1, 10, 100, 1000}) ==
        doctest::Approx(1.0));
  CHECK(std::isnan(spearman_rho(Vec64{1, 1, 1}, Vec64{1, 2, 3})));
  CHECK_THROWS_AS(spearman_rho(Vec64{1}, Vec64{1, 2}), std::invalid_argument);
}

TEST_CASE("median and mean") {
  CHECK(median(Vec64{3, 1, 2}) == 2.0);
  CHECK(median(Vec64{4, 1, 2, 3}) == doctest::Approx(2.5));
  CHECK(mean(Vec64{1, 2, 3}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(median(Vec64{}), std::invalid_argument);
}

TEST_SUITE_END();
