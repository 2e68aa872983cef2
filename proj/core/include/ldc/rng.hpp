#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace ldc {

/// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded generator with platform-independent variate generation. The engine
/// is mt19937_64 (fully specified by the standard); all distributions are
/// implemented here so that streams are bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(mix_seed(seed)), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(uniform() * n);
  }

  double normal() {
    // Box-Muller; 1 - u keeps the logarithm finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double exponential() { return -std::log(1.0 - uniform()); }

  /// Index drawn from an unnormalized or normalized probability vector.
  template <typename Weights>
  int categorical(const Weights& probs) {
    double total = 0.0;
    for (auto p : probs) total += p;
    double u = uniform() * total;
    int last_positive = -1;
    int i = 0;
    for (auto p : probs) {
      if (p > 0.0) {
        last_positive = i;
        if (u < p) return i;
      }
      u -= p;
      ++i;
    }
    return last_positive;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace ldc
