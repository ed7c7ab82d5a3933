#include "optstab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace optstab {

namespace {

// Average ranks, 1-based; ties share the mean of their rank range.
Vec64 ranks_of(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Vec64 ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) +
                              static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) {
    throw std::invalid_argument("mean: empty input");
  }
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median(std::span<const double> v) {
  if (v.empty()) {
    throw std::invalid_argument("median: empty input");
  }
  Vec64 c(v.begin(), v.end());
  std::sort(c.begin(), c.end());
  const std::size_t n = c.size();
  if (n % 2 == 1) return c[n / 2];
  return 0.5 * (c[n / 2 - 1] + c[n / 2]);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman_rho: length mismatch");
  }
  const std::size_t n = x.size();
  if (n < 2) return std::nan("");
  const Vec64 rx = ranks_of(x);
  const Vec64 ry = ranks_of(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace optstab
