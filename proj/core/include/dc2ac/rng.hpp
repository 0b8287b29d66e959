#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dc2ac {

// splitmix64: used only to expand a user seed into generator state.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// xoshiro256++ with splitmix64 seeding. Deterministic across platforms;
// streams for independent scenarios are derived by XOR-ing the base seed
// with a scenario-dependent constant before seeding.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // One standard normal draw per call (Box-Muller, cosine branch only, with
  // u1 shifted into (0, 1]); the sine partner is discarded so each draw
  // consumes exactly two uniforms.
  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t s_[4];
};

// Stream constant for scenario k: golden-ratio increment times (k + 1).
inline std::uint64_t scenario_stream(std::uint64_t seed, std::uint64_t k) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (k + 1));
}

inline constexpr const char* kRngDescription = "xoshiro256++(splitmix64)+box-muller";

}  // namespace dc2ac
