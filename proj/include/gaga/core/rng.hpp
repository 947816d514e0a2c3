#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gaga {

// Deterministic counter-free generator (splitmix64 core). Streams are
// derived by hashing a purpose tag into the seed, so every consumer of
// randomness gets an independent, order-insensitive stream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ kGolden) {}

  static uint64_t hash_tag(std::string_view tag) {
    uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char c : tag) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  static Rng stream(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    uint64_t mixed = mix(seed + kGolden);
    mixed = mix(mixed ^ hash_tag(tag));
    mixed = mix(mixed ^ (index * 0x9e3779b97f4a7c15ull + 0x51ull));
    return Rng(mixed);
  }

  uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
    return lo + static_cast<int64_t>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Box-Muller; explicit implementation keeps byte-level determinism
  // independent of the standard library.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  static constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gaga
