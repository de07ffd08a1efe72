#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hyperdisc {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// derive_seed(s, {a, b}) = splitmix64(splitmix64(s ^ splitmix64(a)) ^ splitmix64(b)).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = base;
  for (auto k : keys) s = splitmix64(s ^ splitmix64(k));
  return s;
}

/// 64-bit Mersenne Twister with a platform-independent [0, 1) mapping
/// (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Inverse-CDF draw from probabilities `p` (any indexable with size()).
  template <class Probs>
  int categorical(const Probs& p) {
    const double u = uniform();
    double acc = 0.0;
    const auto n = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    // rounding left u above the accumulated mass; take the last nonzero bin
    for (int i = n - 1; i >= 0; --i)
      if (p[i] > 0.0) return i;
    return n - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hyperdisc
