#pragma once

// Deterministic randomness plumbing. Every experiment draws from one base
// seed, fanned out into independent named streams ("mock", "loop",
// "simulation") so that subsystems do not perturb each other's sequences.

#include <cassert>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "debiaspi/errors.hpp"

namespace debiaspi {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives the seed of a named stream from the experiment's base seed.
inline std::uint64_t stream_seed(std::uint64_t base_seed, std::string_view stream_name) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the stream name
  for (unsigned char c : stream_name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return splitmix64(splitmix64(base_seed) ^ h);
}

// mt19937_64 wrapper with hand-rolled draw helpers. The std distribution
// adaptors are implementation-defined, so bounded draws are done explicitly
// to keep sequences stable across toolchains.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Index draw proportional to non-negative weights. Zero-weight entries are
  // never chosen.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw ValidationError("categorical draw over zero-mass weights");
    const double u = uniform01() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = i;
      if (u < acc) return i;
    }
    return last_positive;
  }

  // b distinct values from {0, ..., k-1}, uniformly, via partial Fisher-Yates.
  std::vector<std::size_t> distinct(std::size_t k, std::size_t b) {
    assert(b <= k);
    std::vector<std::size_t> pool(k);
    for (std::size_t i = 0; i < k; ++i) pool[i] = i;
    for (std::size_t t = 0; t < b; ++t) {
      const std::size_t r = t + static_cast<std::size_t>(below(k - t));
      std::swap(pool[t], pool[r]);
    }
    pool.resize(b);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace debiaspi
