#pragma once
// Counter-based random streams. Every draw is a pure function of
// (seed, stream, index), so per-sample generation can run in any order and
// still produce identical output.

#include <cstdint>
#include <limits>

namespace care {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent purposes that draw from one global seed.
enum class Stream : std::uint64_t {
  Prototypes = 1,
  Features = 2,
  Noise = 3,
  HeadInit = 4,
  Shuffle = 5,
  TheoryTrials = 6,
  Bootstrap = 7,
  Instances = 8,
  PropositionTrials = 9,
};

/// UniformRandomBitGenerator keyed by (seed, stream, index).
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index)
      : key_(splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) + index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ + 0x632BE59BD9B4E019ULL * ++counter_); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n) for n > 0 (multiply-shift, negligible bias at our sizes).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace care
