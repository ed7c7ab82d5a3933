#include "optstab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace optstab {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  // FNV-1a, then one mix round to spread short labels.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string label)
    : seed_(seed), label_(std::move(label)) {
  state_ = mix64(seed_ + kGamma) ^ hash_label(label_);
}

std::uint64_t RngStream::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("uniform: empty interval");
  }
  return lo + (hi - lo) * uniform01();
}

int RngStream::uniform_int(int lo, int hi) {
  if (lo > hi) {
    throw std::invalid_argument("uniform_int: empty range");
  }
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double RngStream::normal() {
  // Box-Muller; u1 shifted away from zero so log stays finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Vec64 RngStream::normal_vec(std::size_t n) {
  Vec64 out(n);
  for (double& x : out) x = normal();
  return out;
}

RngStream RngStream::fork(std::string_view sub) const {
  return RngStream(seed_, label_ + "/" + std::string(sub));
}

}  // namespace optstab
