#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace smartpower {

/** SplitMix64 step; also used as a 64-bit mixing function. */
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

/** Derives an independent substream seed from a base seed and counters.
 *  Purely arithmetic, so any (base, a, b) triple names the same stream
 *  no matter which thread asks for it. */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t s = base;
  s = splitmix64(s) ^ (0xA0761D6478BD642FULL * (a + 1));
  s = splitmix64(s) ^ (0xE7037ED1A0B428DBULL * (b + 1));
  return splitmix64(s);
}

/** xoshiro256++ with Box-Muller normals. */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
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

  /** Uniform on [0, 1), 53-bit resolution. */
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /** Uniform on (0, 1]; safe as a log() argument. */
  double uniform_oc() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /** Standard normal via Box-Muller (pair cached). */
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_oc()));
    const double theta = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> s_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/** Handle for a family of reproducible substreams. */
struct RngStream {
  std::uint64_t seed = 0;

  RngStream sub(std::uint64_t tag) const { return {derive_seed(seed, tag)}; }
  Rng rng_at(std::uint64_t a, std::uint64_t b = 0) const {
    return Rng(derive_seed(seed, a, b));
  }
  Rng root() const { return Rng(seed); }
};

}  // namespace smartpower
