#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mkmh {

/**
 * Seedable generator with a fully specified output sequence.
 *
 * The engine is std::mt19937_64, whose sequence is fixed by the C++ standard.
 * The standard distributions are not (their algorithms are
 * implementation-defined), so the conversions below are written out:
 *
 *   uniform()      - top 53 bits of one engine draw, scaled to [0, 1)
 *   index(n)       - rejection sampling on the low multiple of n below 2^64
 *   normal()       - Box-Muller on two uniform() draws, second value cached
 *
 * Independent streams for separate pipeline stages come from
 * derive_seed(run_seed, stream), a SplitMix64 mix of the two values.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Stream identifiers used by the pipeline; each randomized stage draws from
/// derive_seed(run_seed, <stream>) and nothing else.
namespace streams {
inline constexpr std::uint64_t kCodebook = 1;        // single codebook training
inline constexpr std::uint64_t kCodebookFirst = 2;   // dual codebook, first half
inline constexpr std::uint64_t kCodebookSecond = 3;  // dual codebook, second half
inline constexpr std::uint64_t kTrainingSplit = 4;
inline constexpr std::uint64_t kQuerySample = 5;
inline constexpr std::uint64_t kRandomShortlist = 6;
}  // namespace streams

}  // namespace mkmh
