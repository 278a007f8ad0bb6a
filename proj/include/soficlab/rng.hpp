#ifndef SOFICLAB_RNG_HPP
#define SOFICLAB_RNG_HPP

#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace soficlab {

// SplitMix64 finalizer; used for seed derivation only.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-task seed: depends only on (seed, task), never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t task) noexcept {
  return mix64(mix64(seed) ^ mix64(task + 0x632be59bd9b4e019ULL));
}

// Seeded generator with portable draws. std::mt19937_64 output is fixed by the
// standard; the distributions below are written out so that results do not
// depend on the standard library implementation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound), bound > 0. Lemire's method with rejection.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Index drawn from a cumulative distribution (last entry ~ 1).
  std::size_t categorical(std::span<const double> cumulative) {
    const double u = uniform() * cumulative.back();
    std::size_t lo = 0;
    std::size_t hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cumulative[mid]) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  // Uniform permutation of {0..n-1} by Fisher-Yates.
  std::vector<std::uint32_t> permutation(std::uint32_t n) {
    std::vector<std::uint32_t> out(n);
    std::iota(out.begin(), out.end(), 0U);
    for (std::uint32_t i = n; i > 1; --i) {
      const auto j = static_cast<std::uint32_t>(below(i));
      std::swap(out[i - 1], out[j]);
    }
    return out;
  }

private:
  std::mt19937_64 engine_;
};

inline std::vector<double> cumulative_of(std::span<const double> weights) {
  std::vector<double> c(weights.size());
  std::partial_sum(weights.begin(), weights.end(), c.begin());
  return c;
}

}  // namespace soficlab

#endif  // SOFICLAB_RNG_HPP
