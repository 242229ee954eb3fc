#pragma once

// Occupation-pattern sectors.
//
// H only flips the spin of singly-occupied sites, alignment jumps do the same,
// and a motion jump moves one particle between two fixed sites. The number of
// particles on every site (the occupation pattern) is therefore unchanged by
// H and changed deterministically by each jump. A state that starts inside one
// pattern stays inside one pattern, whose configurations are labelled by the
// spins of its s singly-occupied sites: 2^s <= 2^N amplitudes instead of
// C(2L, N).

#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/fock.hpp"
#include "aqf/model.hpp"

namespace aqf {

class Sector {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  static constexpr int kMaxSingles = 24;

  Sector() = default;

  // Pattern of configuration c.
  static Sector of(Mask c, int L) {
    Sector s;
    s.L_ = L;
    s.both_ = both_sites(c);
    s.single_ = single_sites(c);
    for (int l = 0; l < L; ++l)
      if (s.single_ & (Mask{1} << (2 * l))) s.singles_.push_back(l);
    if (static_cast<int>(s.singles_.size()) > kMaxSingles) throw ResourceError("sector has too many singly-occupied sites");
    s.base_ = s.both_ | (s.both_ << 1);
    s.masks_.resize(s.size());
    for (std::uint32_t spins = 0; spins < s.size(); ++spins) s.masks_[spins] = s.build(spins);
    return s;
  }

  int sites() const noexcept { return L_; }
  std::size_t size() const noexcept { return std::size_t{1} << singles_.size(); }
  const std::vector<int>& singles() const noexcept { return singles_; }
  int particles() const noexcept { return 2 * std::popcount(both_) + static_cast<int>(singles_.size()); }

  // Configuration with spin j (0 up, 1 down) on the j-th singly-occupied site.
  Mask configuration(std::size_t spins) const noexcept { return masks_[spins]; }
  const std::vector<Mask>& configurations() const noexcept { return masks_; }

  bool contains(Mask c) const noexcept { return both_sites(c) == both_ && single_sites(c) == single_; }

  std::size_t index(Mask c) const noexcept {
    std::size_t spins = 0;
    for (std::size_t j = 0; j < singles_.size(); ++j)
      spins |= static_cast<std::size_t>((c >> (2 * singles_[j] + 1)) & 1u) << j;
    return spins;
  }

  std::size_t find(Mask c) const noexcept { return contains(c) ? index(c) : npos; }

  friend bool operator==(const Sector& a, const Sector& b) noexcept {
    return a.L_ == b.L_ && a.both_ == b.both_ && a.single_ == b.single_;
  }

 private:
  static constexpr Mask kEven = 0x5555555555555555ULL;
  // Even bit 2l set when site l holds both species / exactly one particle.
  static Mask both_sites(Mask c) noexcept { return c & (c >> 1) & kEven; }
  static Mask single_sites(Mask c) noexcept { return (c ^ (c >> 1)) & kEven; }

  Mask build(std::size_t spins) const noexcept {
    Mask c = base_;
    for (std::size_t j = 0; j < singles_.size(); ++j)
      c |= mode_bit(singles_[j], (spins >> j) & 1u ? Spin::Down : Spin::Up);
    return c;
  }

  int L_ = 0;
  Mask both_ = 0;
  Mask single_ = 0;
  Mask base_ = 0;
  std::vector<int> singles_;
  std::vector<Mask> masks_;
};

// Pure state confined to one occupation pattern. Amplitude k belongs to
// configuration sector.configuration(k).
struct SectorState {
  static constexpr std::size_t npos = Sector::npos;

  Sector sector;
  std::vector<Amplitude> amplitudes;

  SectorState() = default;
  explicit SectorState(Sector s) : sector(std::move(s)), amplitudes(sector.size(), Amplitude{}) {}

  std::size_t size() const noexcept { return amplitudes.size(); }
  int sites() const noexcept { return sector.sites(); }
  Mask configuration(std::size_t i) const noexcept { return sector.configuration(i); }
  const Amplitude& amplitude(std::size_t i) const noexcept { return amplitudes[i]; }
  std::size_t find(Mask c) const noexcept { return sector.find(c); }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
  }

  StateVector to_full(std::shared_ptr<const FockBasis> basis) const {
    StateVector out(std::move(basis));
    for (std::size_t i = 0; i < size(); ++i)
      if (amplitudes[i] != Amplitude{}) out[out.basis->index_of(configuration(i))] = amplitudes[i];
    return out;
  }

  // Throws StructuralError when psi has support on more than one pattern.
  static SectorState from_full(const StateVector& psi) {
    const FockBasis& b = *psi.basis;
    SectorState out;
    bool found = false;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (psi[i] == Amplitude{}) continue;
      if (!found) {
        out = SectorState(Sector::of(b[i], b.sites()));
        found = true;
      }
      const std::size_t k = out.find(b[i]);
      if (k == npos) throw StructuralError("state spans several occupation patterns");
      out.amplitudes[k] = psi[i];
    }
    if (!found) throw StructuralError("cannot restrict the zero vector to a sector");
    return out;
  }
};

}  // namespace aqf
