#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace prefkit {

// Deterministic, platform-independent generators. All schedule shuffles and
// synthetic sampling go through these so that a (seed, index) pair fully
// determines the output on every machine. std::mt19937 / std::shuffle are
// deliberately avoided: their streams are not pinned down across library
// implementations.

// splitmix64 (Steele, Lea, Flood 2014). Used to stretch a single 64-bit seed
// into xoshiro state.
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

// xoshiro256** 1.0 (Blackman & Vigna 2018).
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Independent stream for the i-th unit of work under one run seed. Mixing the
// index through splitmix keeps streams decorrelated regardless of thread
// interleaving.
inline Xoshiro256 stream_rng(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 sm(seed);
  std::uint64_t base = sm.next();
  return Xoshiro256(base ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
}

// Fisher-Yates with the pinned generator.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Xoshiro256& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace prefkit
