#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace feslab {

/// Deterministic random stream. mt19937_64 supplies the bits; the uniform and
/// normal transforms are pinned here so draws do not depend on the standard
/// library's distribution internals. Named child streams let independent
/// consumers (environment resets, policy noise, batch sampling) share one
/// master seed without coupling their draw order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform index in {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  /// Independent stream derived from this stream's seed and a tag. Children
  /// depend only on (seed, tag), never on how much the parent has drawn.
  Rng child(std::string_view tag) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (char c : tag) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 1099511628211ull;
    }
    return Rng(splitmix64(seed_ ^ h));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace feslab
