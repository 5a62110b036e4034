#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lanerl {

/// Mixes a 64-bit value (splitmix64 finalizer). Used for seed derivation so
/// that every component of a run gets its own decorrelated stream from the
/// single user-facing seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// FNV-1a over a string tag; combined with the run seed to derive stream seeds.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Deterministic per-purpose seed: same (seed, tag, index) -> same stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return mix64(seed ^ mix64(hash_tag(tag)) ^ mix64(index * 0x9e3779b97f4a7c15ull + 1));
}

/// Seeded random stream. Thin wrapper so call sites do not repeat
/// distribution boilerplate; one instance per execution context.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double p) {
    return std::bernoulli_distribution(p)(engine_);
  }
  std::uint64_t raw() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lanerl
