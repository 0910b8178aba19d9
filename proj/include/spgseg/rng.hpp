#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace spgseg::rng {

// mt19937_64 output is fully specified by the standard; the value mappings
// below are our own so that seeded results are bit-identical everywhere
// (std::uniform_*_distribution is implementation-defined).
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// splitmix64 finalizer, used to derive independent sub-seeds
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// uniform in [0,1)
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// unbiased integer in [0,n)
inline std::uint64_t below(Engine& eng, std::uint64_t n) {
  assert(n > 0);
  const std::uint64_t excess = (0 - n) % n;  // 2^64 mod n
  std::uint64_t r = eng();
  while (r < excess) r = eng();
  return r % n;
}

inline int below_int(Engine& eng, int n) {
  return static_cast<int>(below(eng, static_cast<std::uint64_t>(n)));
}

// Box-Muller, cosine branch
inline double normal(Engine& eng, double mean = 0.0, double stddev = 1.0) {
  double u1 = uniform01(eng);
  double u2 = uniform01(eng);
  if (u1 < 1e-300) u1 = 1e-300;  // log(0) guard
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle(Engine& eng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = below(eng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// k distinct values from [0,n), ascending
inline std::vector<int> sample_without_replacement(Engine& eng, int n, int k) {
  assert(k <= n);
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + below_int(eng, n - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace spgseg::rng
