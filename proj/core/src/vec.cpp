#include "optstab/vec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace optstab {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) {
    throw std::invalid_argument(std::string(what) +
                                ": non-finite entry");
  }
}

double l2_norm(std::span<const double> v) {
  if (v.empty()) {
    throw std::invalid_argument("l2_norm: empty vector");
  }
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: length mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

Vec64 sub(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("sub: length mismatch");
  }
  Vec64 out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: length mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec64 softmax(std::span<const double> logits) {
  if (logits.empty()) {
    throw std::invalid_argument("softmax: empty input");
  }
  require_finite(logits, "softmax");
  const double zmax = *std::max_element(logits.begin(), logits.end());
  Vec64 out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - zmax);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

}  // namespace optstab
