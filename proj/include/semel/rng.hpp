#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace semel {

/// xoshiro256++ 1.0 (Blackman & Vigna, 2019), state initialized with a
/// splitmix64 stream of the seed. The algorithm is fixed so that a given
/// seed replays the same draw sequence on every platform. Every variate
/// below consumes a fixed number of generator words, which keeps
/// per-replication streams independent of call history.
class Rng {
public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * kInv53; }

  /// Standard normal via Box-Muller; consumes exactly two words.
  double normal() noexcept {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * kInv53;  // (0, 1]
    const double u2 = static_cast<double>(next_u64() >> 11) * kInv53;        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  static constexpr double kTwoPi = 6.283185307179586476925286766559;

  static std::uint64_t rotl(std::uint64_t v, int k) noexcept {
    return (v << k) | (v >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace semel
