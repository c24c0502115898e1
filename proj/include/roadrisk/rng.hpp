#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace roadrisk {

/// Deterministic random source. Wraps std::mt19937 but draws values itself
/// instead of going through std::uniform_* / std::shuffle, whose output is
/// implementation-defined. Identical seeds give identical streams on every
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : gen_(seed) {}

  std::uint32_t next_u32() { return gen_(); }

  /// Uniform in [0, 1) with 24 bits of resolution.
  float uniform01f() {
    return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  float uniformf(float lo, float hi) { return lo + uniform01f() * (hi - lo); }

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
  }

  /// Uniform integer in [lo, hi] inclusive.
  int int_range(int lo, int hi) {
    return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo) + 1));
  }

  /// Fisher-Yates with pinned draw order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  /// Derives an independent stream seed from a base seed (splitmix-style mix).
  static std::uint32_t derive(std::uint32_t seed, std::uint32_t stream) {
    std::uint64_t z = (static_cast<std::uint64_t>(seed) << 32) | stream;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return static_cast<std::uint32_t>(z ^ (z >> 32));
  }

 private:
  std::mt19937 gen_;
};

}  // namespace roadrisk
