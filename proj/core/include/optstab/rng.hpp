#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "optstab/vec.hpp"

namespace optstab {

/// Deterministic labeled random stream.
///
/// The (seed, label) pair fully determines the draw sequence, independent of
/// platform and of any other stream. Substreams are addressed by label
/// (`fork`), never by draw position, so adding draws to one consumer cannot
/// shift another consumer's sequence.
///
/// The generator is splitmix64 over a state derived from seed and label;
/// normal variates use Box-Muller on explicit 53-bit uniforms rather than
/// std::normal_distribution, whose output is implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string label);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi);

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  /// Standard normal (Box-Muller; consumes two uniforms per call).
  double normal();

  Vec64 normal_vec(std::size_t n);

  /// Substream (seed, label + "/" + sub). Independent of this stream's
  /// current position.
  RngStream fork(std::string_view sub) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t state_;
};

}  // namespace optstab
