#pragma once

#include <cmath>
#include <cstdint>

namespace clvq::rng {

// Counter-based generator built on splitmix64 (Steele/Lea/Flood 2014).
// The integer stream is a pure function of the 64-bit state, so sequences
// reproduce bit-for-bit across runs and substreams are cheap to derive by
// remixing the seed. Normal deviates use the Marsaglia polar method, which
// needs only sqrt/log from libm.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

class Engine {
 public:
  explicit Engine(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() { return mix64(state_ += kGolden); }

  // 53-bit draw in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // (0, 1]; never zero, safe under log().
  double next_unit_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Engine for substream `index` of `seed`. Distinct (seed, index) pairs give
// decorrelated state words; consecutive seeds are fine because both words go
// through the full mixer.
inline Engine substream(std::uint64_t seed, std::uint64_t index) {
  return Engine(mix64(seed + kGolden) ^
                mix64(index * kGolden + 0x632BE59BD9B4E019ull));
}

}  // namespace clvq::rng
