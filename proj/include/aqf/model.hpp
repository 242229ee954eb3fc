#pragma once

// Hamiltonian and quantum jump operators of the active two-species
// hard-core boson chain, applied matrix-free to state vectors.
//
//   H        = -h sum_l (c+_{l,up} c_{l,dn} + h.c.)
//   M_{l,up} = c+_{l,up} c_{l+1,up}        (up particles hop left)
//   M_{l,dn} = c+_{l+1,dn} c_{l,dn}        (down particles hop right)
//   A_{l,s}  = c+_{l,s} c_{l,-s} P_l       (conditional spin flip)
//
// P_l is diagonal in the configuration basis and acts before the flip, so its
// eigenvalue is always read from the pre-flip configuration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/fock.hpp"

namespace aqf {

using Amplitude = std::complex<double>;

enum class Kernel { Exponential, Linear, Delta };

inline std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::Exponential: return "exponential";
    case Kernel::Linear: return "linear";
    case Kernel::Delta: return "delta";
  }
  return "?";
}

inline Kernel parse_kernel(const std::string& s) {
  if (s == "exponential") return Kernel::Exponential;
  if (s == "linear") return Kernel::Linear;
  if (s == "delta") return Kernel::Delta;
  throw ParameterError("unknown alignment kernel '" + s + "' (exponential|linear|delta)");
}

struct ModelParams {
  int L = 8;
  int N = 4;
  double h = 0.2;
  double gamma_M = 1.0;
  double gamma_A = 1.0;
  double K = 3.8;
  int r = 4;
  Kernel kernel = Kernel::Exponential;
  int M0 = 2;  // target neighbourhood magnetization of the delta kernel

  // L = 1 has no admissible radius under r <= L/2; it is allowed with r = 1,
  // in which case the neighbourhood wraps onto the site itself.
  void validate() const {
    if (L < 1 || L > kMaxSites) throw ParameterError("model.L must lie in [1, 31]");
    if (N < 0 || N > 2 * L) throw ParameterError("model.N must lie in [0, 2L]");
    if (!(h >= 0.0)) throw ParameterError("model.h must be >= 0");
    if (!(gamma_M >= 0.0)) throw ParameterError("model.gamma_M must be >= 0");
    if (!(gamma_A >= 0.0)) throw ParameterError("model.gamma_A must be >= 0");
    if (!std::isfinite(K)) throw ParameterError("model.K must be finite");
    const int r_max = L >= 2 ? L / 2 : 1;
    if (r < 1 || r > r_max) throw ParameterError("model.r must lie in [1, L/2]");
  }

  // Paper defaults: Gamma_M = Gamma_A = 1, r = 4, half filling.
  static ModelParams defaults_for(int L) {
    ModelParams p;
    p.L = L;
    p.N = L / 2;
    p.r = std::min(4, std::max(1, L / 2));
    return p;
  }
};

inline void require_compatible(const FockBasis& basis, const ModelParams& p) {
  if (basis.sites() != p.L || basis.particles() != p.N) {
    throw StructuralError("basis (L=" + std::to_string(basis.sites()) + ", N=" +
                          std::to_string(basis.particles()) + ") does not match model parameters (L=" +
                          std::to_string(p.L) + ", N=" + std::to_string(p.N) + ")");
  }
}

// S_l = sum_{1 <= |j| <= r} m_{l+j}, periodic.
inline int neighbourhood_magnetization(Mask c, int site, int r, int L) noexcept {
  int s = 0;
  for (int j = 1; j <= r; ++j) {
    s += local_magnetization(c, wrap(site + j, L));
    s += local_magnetization(c, wrap(site - j, L));
  }
  return s;
}

// Raw linear-kernel value before clamping; negative values signal clamping.
inline double linear_kernel_raw(Mask c, int site, const ModelParams& p) noexcept {
  const int x = local_magnetization(c, site) * neighbourhood_magnetization(c, site, p.r, p.L);
  return 1.0 - p.K / (2.0 * p.r) * x;
}

// Diagonal eigenvalue of P_l on configuration c for a flip into species
// `target`. Only the delta kernel depends on the target species.
inline double alignment_weight(Mask c, int site, Spin target, const ModelParams& p) noexcept {
  switch (p.kernel) {
    case Kernel::Exponential: {
      const int x = local_magnetization(c, site) * neighbourhood_magnetization(c, site, p.r, p.L);
      return std::exp(-p.K / (2.0 * p.r) * x);
    }
    case Kernel::Linear:
      return std::max(0.0, linear_kernel_raw(c, site, p));
    case Kernel::Delta: {
      const int s = neighbourhood_magnetization(c, site, p.r, p.L);
      return s == sign(target) * p.M0 ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

// Number of (configuration, site) pairs where the linear kernel is clamped to 0.
inline std::uint64_t count_linear_clamps(const FockBasis& basis, const ModelParams& p) {
  if (p.kernel != Kernel::Linear) return 0;
  std::uint64_t n = 0;
  for (Mask c : basis)
    for (int l = 0; l < p.L; ++l)
      if (linear_kernel_raw(c, l, p) < 0.0) ++n;
  return n;
}

enum class ChannelKind : std::uint8_t { Motion, Alignment };

struct JumpChannel {
  ChannelKind kind = ChannelKind::Motion;
  int site = 0;
  Spin species = Spin::Up;
  friend bool operator==(const JumpChannel&, const JumpChannel&) = default;
};

// Channel ordering: motion (site-major, up before down), then alignment.
inline std::vector<JumpChannel> jump_channels(int L) {
  std::vector<JumpChannel> out;
  out.reserve(static_cast<std::size_t>(4 * L));
  for (ChannelKind k : {ChannelKind::Motion, ChannelKind::Alignment})
    for (int l = 0; l < L; ++l)
      for (Spin s : {Spin::Up, Spin::Down}) out.push_back({k, l, s});
  return out;
}

inline double channel_rate(const JumpChannel& ch, const ModelParams& p) noexcept {
  return ch.kind == ChannelKind::Motion ? p.gamma_M : p.gamma_A;
}

struct Transition {
  Mask target = 0;
  double amplitude = 0.0;
};

// Action of one jump operator on a basis configuration. Returns nothing when
// the operator annihilates c (empty source, blocked target, zero weight).
inline std::optional<Transition> apply_channel(Mask c, const JumpChannel& ch, const ModelParams& p) noexcept {
  const int l = ch.site;
  if (ch.kind == ChannelKind::Motion) {
    const int next = wrap(l + 1, p.L);
    const int from = ch.species == Spin::Up ? next : l;
    const int to = ch.species == Spin::Up ? l : next;
    const Mask src = mode_bit(from, ch.species);
    const Mask dst = mode_bit(to, ch.species);
    if (!(c & src) || (c & dst)) return std::nullopt;
    return Transition{(c & ~src) | dst, 1.0};
  }
  const Spin s = ch.species;
  if (occupied(c, l, s) || !occupied(c, l, flipped(s))) return std::nullopt;
  const double w = alignment_weight(c, l, s, p);
  if (w == 0.0) return std::nullopt;
  return Transition{c ^ site_bits(l), w};
}

// Pure state of one trajectory over a fixed basis.
struct StateVector {
  std::shared_ptr<const FockBasis> basis;
  std::vector<Amplitude> amplitudes;

  StateVector() = default;
  explicit StateVector(std::shared_ptr<const FockBasis> b)
      : basis(std::move(b)), amplitudes(basis->size(), Amplitude{}) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t size() const noexcept { return amplitudes.size(); }
  int sites() const noexcept { return basis->sites(); }
  Mask configuration(std::size_t i) const noexcept { return (*basis)[i]; }
  const Amplitude& amplitude(std::size_t i) const noexcept { return amplitudes[i]; }
  std::size_t find(Mask c) const noexcept { return basis->contains(c) ? basis->rank(c) : npos; }
  Amplitude& operator[](std::size_t i) noexcept { return amplitudes[i]; }
  const Amplitude& operator[](std::size_t i) const noexcept { return amplitudes[i]; }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
  }
  double norm() const noexcept { return std::sqrt(norm_squared()); }

  // Returns the norm before scaling.
  double normalize() {
    const double n = norm();
    if (n == 0.0) throw IntegrationError("cannot normalize the zero vector", 0.0);
    const double inv = 1.0 / n;
    for (auto& a : amplitudes) a *= inv;
    return n;
  }

  static StateVector basis_state(std::shared_ptr<const FockBasis> b, Mask c) {
    StateVector v(b);
    v.amplitudes[b->index_of(c)] = 1.0;
    return v;
  }
};

inline Amplitude inner(const StateVector& a, const StateVector& b) {
  if (a.basis != b.basis && !(*a.basis == *b.basis)) throw StructuralError("inner: basis mismatch");
  Amplitude s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline StateVector apply_hamiltonian(const StateVector& psi, const ModelParams& p) {
  require_compatible(*psi.basis, p);
  const FockBasis& basis = *psi.basis;
  StateVector out(psi.basis);
  if (p.h == 0.0) return out;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Mask c = basis[i];
    for (int l = 0; l < p.L; ++l) {
      const unsigned s = local_state(c, l);
      if (s == 1u || s == 2u) out[basis.rank(c ^ site_bits(l))] += -p.h * psi[i];
    }
  }
  return out;
}

inline StateVector apply_jump(const StateVector& psi, const JumpChannel& ch, const ModelParams& p) {
  require_compatible(*psi.basis, p);
  const FockBasis& basis = *psi.basis;
  StateVector out(psi.basis);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (psi[i] == Amplitude{}) continue;
    if (auto t = apply_channel(basis[i], ch, p)) out[basis.rank(t->target)] += t->amplitude * psi[i];
  }
  return out;
}

inline StateVector apply_motion_jump(const StateVector& psi, int site, Spin s, const ModelParams& p) {
  return apply_jump(psi, {ChannelKind::Motion, site, s}, p);
}

inline StateVector apply_alignment_jump(const StateVector& psi, int site, Spin s, const ModelParams& p) {
  return apply_jump(psi, {ChannelKind::Alignment, site, s}, p);
}

// Z2 map c_{l,s} -> c_{(m-l) mod L, -s}: reflect the lattice about m/2 and
// swap species.
inline Mask z2_transform(Mask c, int m, int L) noexcept {
  Mask out = 0;
  for (int l = 0; l < L; ++l) {
    const int image = wrap(m - l, L);
    if (occupied(c, l, Spin::Up)) out |= mode_bit(image, Spin::Down);
    if (occupied(c, l, Spin::Down)) out |= mode_bit(image, Spin::Up);
  }
  return out;
}

}  // namespace aqf
