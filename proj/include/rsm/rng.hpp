#ifndef RSM_RNG_HPP
#define RSM_RNG_HPP

// Portable random helpers. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so draws are done by hand to
// keep datasets and splits byte-identical across standard libraries.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace rsm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Named sub-seed, so "split", "synth", ... streams never overlap.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(seed ^ splitmix64(h ^ splitmix64(index)));
}

/// Uniform in [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), unbiased.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit)
      return x % n;
  }
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

/// `draws` categorical samples from probs, returned as per-category counts.
inline std::vector<std::uint64_t> multinomial(Rng& rng, std::span<const double> probs,
                                              std::uint64_t draws) {
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    cdf[i] = (acc += probs[i]);
  std::vector<std::uint64_t> counts(probs.size(), 0);
  for (std::uint64_t d = 0; d < draws; ++d) {
    const double u = uniform01(rng) * acc;
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cdf[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    ++counts[lo];
  }
  return counts;
}

} // namespace rsm

#endif // RSM_RNG_HPP
