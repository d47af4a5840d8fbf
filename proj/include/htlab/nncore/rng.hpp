#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace htlab::nncore {

// Seeded generator used everywhere randomness is needed. std::mt19937 has a
// standard-pinned output sequence, but the std distributions do not, so the
// uniform/normal transforms are spelled out here to keep every platform and
// libstdc++ version on the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : gen_(static_cast<std::mt19937::result_type>(seed)) {}

  std::uint32_t next_u32() { return gen_(); }

  // Uniform in [0, 1) with 24 bits of resolution.
  float unit() {
    return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
  }

  float uniform(float lo, float hi) { return lo + (hi - lo) * unit(); }

  // Box-Muller transform; one draw consumed per call for a stable stream.
  float normal(float mean, float stddev) {
    // unit() can return 0, which log() rejects; nudge into (0, 1].
    const float u1 = 1.0f - unit();
    const float u2 = unit();
    const float r = std::sqrt(-2.0f * std::log(u1));
    const float theta = 6.2831853071795864769f * u2;
    return mean + stddev * r * std::cos(theta);
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(next_u32() % static_cast<std::uint32_t>(n));
  }

  // Fisher-Yates; deterministic given the seed and vector length.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937 gen_;
};

}  // namespace htlab::nncore
