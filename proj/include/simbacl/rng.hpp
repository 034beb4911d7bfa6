#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

#include "simbacl/error.hpp"

namespace simbacl {

// Counter-based generator: every draw is a hash of (key, counter), so a
// stream keyed by (seed, simulation, t, n) yields the same numbers no matter
// in which order or on which thread it is consumed.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t key_combine(std::uint64_t key, std::uint64_t word) {
  return mix64(key ^ (mix64(word) + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2)));
}

inline constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  /// Child stream; derivation is order-sensitive and collision-resistant
  /// enough for simulation work.
  Rng derive(std::string_view tag) const { return Rng(key_combine(key_, hash_tag(tag))); }
  Rng derive(std::string_view tag, std::uint64_t a) const {
    return Rng(key_combine(key_combine(key_, hash_tag(tag)), a));
  }
  Rng derive(std::string_view tag, std::uint64_t a, std::uint64_t b) const {
    return Rng(key_combine(key_combine(key_combine(key_, hash_tag(tag)), a), b));
  }
  Rng derive(std::string_view tag, std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return Rng(key_combine(key_combine(key_combine(key_combine(key_, hash_tag(tag)), a), b), c));
  }

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(ctr_++)); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (platform-independent, unlike
  /// std::normal_distribution).
  double normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 == 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Index sampled proportionally to the (nonnegative) weights; total need
  /// not be 1.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw NumericError("categorical: zero total weight");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    for (std::size_t i = weights.size(); i-- > 0;)  // never land on a zero weight
      if (weights[i] > 0.0) return static_cast<int>(i);
    return 0;
  }

  bool bernoulli(double p) { return uniform() < p; }

private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace simbacl
