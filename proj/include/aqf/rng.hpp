#pragma once

// Counter-based random numbers (Philox4x32-10). A stream is fully determined
// by (seed, trajectory index, stream id), so trajectories are reproducible no
// matter which worker runs them or in which order.

#include <array>
#include <cstdint>
#include <limits>

namespace aqf {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter hash(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

enum class Stream : std::uint32_t { Jumps = 0, Snapshots = 1, Classical = 2, Noise = 3 };

// Satisfies UniformRandomBitGenerator for 32-bit words.
class CounterRng {
 public:
  using result_type = std::uint32_t;

  CounterRng(std::uint64_t seed, std::uint64_t index, Stream stream = Stream::Jumps) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_lo_(static_cast<std::uint32_t>(index)),
        tag_((static_cast<std::uint32_t>(stream) << 24) ^ static_cast<std::uint32_t>(index >> 32)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    const std::uint64_t hi = (*this)() >> 5;  // 27 bits
    const std::uint64_t lo = (*this)() >> 6;  // 26 bits
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  // Uniform integer in [0, n) by rejection; n > 0.
  std::uint32_t below(std::uint32_t n) noexcept {
    const std::uint32_t limit = max() - max() % n;
    std::uint32_t x;
    do x = (*this)();
    while (x >= limit);
    return x % n;
  }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  void refill() noexcept {
    buffer_ = Philox4x32::hash({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                index_lo_, tag_},
                               key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t index_lo_;
  std::uint32_t tag_;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buffer_{};
  int pos_ = 4;
};

}  // namespace aqf
