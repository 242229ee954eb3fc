#pragma once

// Configuration space of two species of hard-core bosons on a periodic chain
// at fixed total particle number.
//
// A configuration is a 2L-bit mask: bit 2l is an up particle on site l, bit
// 2l+1 a down particle on site l. Basis states are stored in ascending mask
// order, which for fixed popcount coincides with the colexicographic order,
// so index_of() is a combinatorial rank instead of a hash lookup.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "aqf/error.hpp"

namespace aqf {

using Mask = std::uint64_t;

enum class Spin : std::uint8_t { Up = 0, Down = 1 };

constexpr Spin flipped(Spin s) noexcept { return s == Spin::Up ? Spin::Down : Spin::Up; }
constexpr int sign(Spin s) noexcept { return s == Spin::Up ? +1 : -1; }

struct SiteOccupation {
  bool up = false;
  bool down = false;
  friend bool operator==(const SiteOccupation&, const SiteOccupation&) = default;
};

inline constexpr int kMaxSites = 31;

constexpr Mask mode_bit(int site, Spin s) noexcept {
  return Mask{1} << (2 * site + static_cast<int>(s));
}

constexpr Mask site_bits(int site) noexcept { return Mask{3} << (2 * site); }

constexpr bool occupied(Mask c, int site, Spin s) noexcept { return (c & mode_bit(site, s)) != 0; }

constexpr SiteOccupation site_occupation(Mask c, int site) noexcept {
  return {occupied(c, site, Spin::Up), occupied(c, site, Spin::Down)};
}

// Two-bit local state of one site: 0 empty, 1 up, 2 down, 3 up+down.
constexpr unsigned local_state(Mask c, int site) noexcept {
  return static_cast<unsigned>((c >> (2 * site)) & 3u);
}

// m_l = n_up(l) - n_down(l)
constexpr int local_magnetization(Mask c, int site) noexcept {
  return static_cast<int>(occupied(c, site, Spin::Up)) -
         static_cast<int>(occupied(c, site, Spin::Down));
}

constexpr int total_particles(Mask c) noexcept { return std::popcount(c); }

// M = sum_l m_l: popcount of even bits minus popcount of odd bits.
constexpr int magnetization(Mask c) noexcept {
  constexpr Mask even = 0x5555555555555555ULL;
  return std::popcount(c & even) - std::popcount(c & ~even);
}

constexpr int wrap(int site, int L) noexcept {
  const int r = site % L;
  return r < 0 ? r + L : r;
}

// Periodic distance between two sites.
constexpr int ring_distance(int a, int b, int L) noexcept {
  const int d = wrap(a - b, L);
  return d < L - d ? d : L - d;
}

// Human-readable configuration, one token per site: 0, u, d, B (both).
inline std::string to_string(Mask c, int L) {
  static constexpr char glyph[4] = {'0', 'u', 'd', 'B'};
  std::string out;
  out.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) out.push_back(glyph[local_state(c, l)]);
  return out;
}

class FockBasis {
 public:
  FockBasis(int L, int N) : L_(L), N_(N) {
    if (L < 1 || L > kMaxSites) throw ParameterError("FockBasis: L must lie in [1, 31]");
    if (N < 0 || N > 2 * L) throw ParameterError("FockBasis: N must lie in [0, 2L]");
    for (int n = 0; n < kModes; ++n) {
      binom_[n][0] = 1;
      for (int k = 1; k <= n; ++k) binom_[n][k] = binom_[n - 1][k - 1] + (k <= n - 1 ? binom_[n - 1][k] : 0);
    }
    const std::uint64_t count = binom_[2 * L][N];
    if (count > kMaxDimension) {
      throw ResourceError("FockBasis: dimension C(2L,N)=" + std::to_string(count) +
                          " exceeds the guard of " + std::to_string(kMaxDimension));
    }
    states_.reserve(count);
    if (N == 0) {
      states_.push_back(0);
      return;
    }
    const Mask limit = Mask{1} << (2 * L);
    // Gosper's hack: next larger integer with the same popcount.
    for (Mask c = (Mask{1} << N) - 1; c < limit;) {
      states_.push_back(c);
      const Mask lowest = c & (~c + 1);
      const Mask ripple = c + lowest;
      c = (((ripple ^ c) >> 2) / lowest) | ripple;
    }
  }

  int sites() const noexcept { return L_; }
  int particles() const noexcept { return N_; }
  std::size_t size() const noexcept { return states_.size(); }
  Mask operator[](std::size_t i) const noexcept { return states_[i]; }
  const std::vector<Mask>& states() const noexcept { return states_; }
  auto begin() const noexcept { return states_.begin(); }
  auto end() const noexcept { return states_.end(); }

  bool contains(Mask c) const noexcept {
    return std::popcount(c) == N_ && (c >> (2 * L_)) == 0;
  }

  // Colexicographic rank: sum over the i-th set bit (position p) of C(p, i+1).
  std::size_t index_of(Mask c) const {
    if (!contains(c)) throw StructuralError("FockBasis::index_of: configuration outside the basis");
    return rank(c);
  }

  // Unchecked rank for hot loops; c must satisfy contains(c).
  std::size_t rank(Mask c) const noexcept {
    std::uint64_t r = 0;
    int i = 1;
    while (c) {
      const int p = std::countr_zero(c);
      r += binom_[p][i];
      ++i;
      c &= c - 1;
    }
    return static_cast<std::size_t>(r);
  }

  static std::uint64_t binomial(int n, int k) noexcept {
    if (k < 0 || n < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int j = 1; j <= k; ++j) r = r * static_cast<std::uint64_t>(n - k + j) / static_cast<std::uint64_t>(j);
    return r;
  }

  friend bool operator==(const FockBasis& a, const FockBasis& b) noexcept {
    return a.L_ == b.L_ && a.N_ == b.N_;
  }

  static constexpr std::uint64_t kMaxDimension = 50'000'000;

 private:
  static constexpr int kModes = 2 * kMaxSites + 2;
  int L_;
  int N_;
  std::array<std::array<std::uint64_t, kModes>, kModes> binom_{};
  std::vector<Mask> states_;
};

}  // namespace aqf
