#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>
#include <cmath>
#include <cstddef>

namespace srkit {

// All stochastic code draws through these helpers on top of mt19937_64 so that
// a given seed produces the same stream on every platform. The std::*_distribution
// classes are implementation-defined and must not be used anywhere in the library.
using Rng = std::mt19937_64;

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ull));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

// Uniform in [0,1) with 53-bit resolution.
inline double uniform01(Rng& g) {
  return double(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Unbiased integer draw in [0,n). n must be >= 1.
inline std::size_t uniform_index(Rng& g, std::size_t n) {
  const std::uint64_t un = n;
  const std::uint64_t threshold = (-un) % un;  // 2^64 mod n
  for (;;) {
    std::uint64_t x = g();
    if (x >= threshold) return std::size_t(x % un);
  }
}

// Standard normal via Box-Muller; consumes exactly two raw draws.
inline double normal01(Rng& g) {
  double u1 = 1.0 - uniform01(g);  // (0,1], keeps log finite
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

inline double normal(Rng& g, double mean, double sd) {
  return mean + sd * normal01(g);
}

// Index draw proportional to non-negative weights; falls back to uniform when
// the total mass is zero.
inline std::size_t weighted_index(Rng& g, const std::vector<double>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) return uniform_index(g, w.size());
  double r = uniform01(g) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    acc += w[i];
    if (r < acc) return i;
  }
  return w.size() - 1;
}

// Fisher-Yates with our own index draws; std::shuffle is not reproducible
// across standard library implementations.
template <class T>
void shuffle(Rng& g, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(g, i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace srkit
