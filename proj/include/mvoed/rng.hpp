#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace mvoed {

/// Stream tags used to split a master seed into independent sub-streams.
enum class StreamTag : std::uint64_t {
  kPrior = 1,
  kNoise = 2,
  kInnerMarginal = 3,
  kInnerSecondMoment = 4,
  kEvaluation = 5,
  kInitialDesign = 6,
  kAcquisition = 7,
  kReplicate = 8,
  kUser = 100,
};

/// Mixes a seed with a tag and an index into a new 64-bit seed.
/// Pure function; identical inputs always give identical outputs.
std::uint64_t derive_seed(std::uint64_t master, StreamTag tag, std::uint64_t index = 0);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index);

/// xoshiro256** seeded through splitmix64. Satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed);
  RandomStream(std::uint64_t master, StreamTag tag, std::uint64_t index = 0)
      : RandomStream(derive_seed(master, tag, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal draw (polar Box-Muller, cached pair).
  double normal();

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// 64-bit FNV-1a over raw bytes; used for cache keys.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace mvoed
