#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <concepts>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/fock.hpp"
#include "aqf/model.hpp"

namespace aqf {

// A normalized pure state seen as a list of (configuration, amplitude) pairs
// with reverse lookup. Implemented by StateVector (whole basis) and by the
// sector-restricted trajectory state.
template <class V>
concept ConfigurationView = requires(const V& v, std::size_t i, Mask c) {
  { v.size() } -> std::convertible_to<std::size_t>;
  { v.sites() } -> std::convertible_to<int>;
  { v.configuration(i) } -> std::convertible_to<Mask>;
  { v.amplitude(i) } -> std::convertible_to<Amplitude>;
  { v.find(c) } -> std::convertible_to<std::size_t>;
};

struct Moments {
  double m1 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

// <M>, <M^2>, <M^4> of a normalized state; M is diagonal in the basis.
template <ConfigurationView State>
Moments magnetization_moments(const State& psi) {
  Moments out;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double w = std::norm(psi.amplitude(i));
    if (w == 0.0) continue;
    const double M = magnetization(psi.configuration(i));
    const double M2 = M * M;
    out.m1 += w * M;
    out.m2 += w * M2;
    out.m4 += w * M2 * M2;
  }
  return out;
}

inline constexpr double kBinderTolerance = 1e-12;

// U = 1 - m4 / (3 m2^2) from ensemble-averaged moments. Empty when m2 is too
// small for the ratio to be meaningful.
inline std::optional<double> binder(double m2, double m4) noexcept {
  if (!(m2 > kBinderTolerance)) return std::nullopt;
  return 1.0 - m4 / (3.0 * m2 * m2);
}

// 16x16 density matrix of the site pair (l, l + L/2). Row/column index is
// 4 * a_l + a_{l+L/2} with the per-site local state a in {0, up, down, both}
// encoded as in local_state().
struct PairDensity {
  std::array<Amplitude, 256> m{};

  Amplitude& operator()(int row, int col) noexcept { return m[static_cast<std::size_t>(16 * row + col)]; }
  const Amplitude& operator()(int row, int col) const noexcept {
    return m[static_cast<std::size_t>(16 * row + col)];
  }
  Amplitude trace() const noexcept {
    Amplitude t{};
    for (int i = 0; i < 16; ++i) t += (*this)(i, i);
    return t;
  }
  PairDensity& operator+=(const PairDensity& o) noexcept {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += o.m[i];
    return *this;
  }
  PairDensity& operator*=(double s) noexcept {
    for (auto& x : m) x *= s;
    return *this;
  }
  // Same matrix with the roles of the two sites exchanged.
  PairDensity swapped_sites() const noexcept {
    PairDensity out;
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b) out(swap_index(a), swap_index(b)) = (*this)(a, b);
    return out;
  }
  static constexpr int swap_index(int a) noexcept { return 4 * (a % 4) + a / 4; }
};

namespace detail {

// Pair states grouped by how many particles they hold (0..4).
inline const std::array<std::vector<int>, 5>& pair_states_by_count() {
  static const std::array<std::vector<int>, 5> groups = [] {
    std::array<std::vector<int>, 5> g;
    for (int s = 0; s < 16; ++s) g[static_cast<std::size_t>(std::popcount(static_cast<unsigned>(s)))].push_back(s);
    return g;
  }();
  return groups;
}

template <ConfigurationView State>
void accumulate_pair(const State& psi, int l, PairDensity& out) {
  const int L = psi.sites();
  const int l2 = wrap(l + L / 2, L);
  const Mask clear = ~(site_bits(l) | site_bits(l2));
  const auto& groups = pair_states_by_count();
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const Amplitude ai = psi.amplitude(i);
    if (ai == Amplitude{}) continue;
    const Mask c = psi.configuration(i);
    const int row = static_cast<int>(4 * local_state(c, l) + local_state(c, l2));
    const Mask rest = c & clear;
    for (int col : groups[static_cast<std::size_t>(std::popcount(static_cast<unsigned>(row)))]) {
      const Mask other = rest | (static_cast<Mask>(col >> 2) << (2 * l)) | (static_cast<Mask>(col & 3) << (2 * l2));
      const std::size_t j = psi.find(other);
      if (j == static_cast<std::size_t>(-1)) continue;
      const Amplitude aj = psi.amplitude(j);
      if (aj != Amplitude{}) out(row, col) += ai * std::conj(aj);
    }
  }
}

}  // namespace detail

// Partial trace of |psi><psi| onto sites {l, l + L/2}.
template <ConfigurationView State>
PairDensity reduced_two_site(const State& psi, int l) {
  const int L = psi.sites();
  if (L % 2 != 0) throw ParameterError("reduced_two_site requires an even number of sites");
  if (l < 0 || l >= L) throw ParameterError("reduced_two_site: site out of range");
  PairDensity out;
  detail::accumulate_pair(psi, l, out);
  return out;
}

// Reduced matrices for every l = 0..L-1. Pairs l and l + L/2 cover the same
// two sites, so only the first half is computed directly.
template <ConfigurationView State>
std::vector<PairDensity> reduced_two_site_all(const State& psi) {
  const int L = psi.sites();
  if (L % 2 != 0) throw ParameterError("reduced_two_site requires an even number of sites");
  std::vector<PairDensity> out(static_cast<std::size_t>(L));
  for (int l = 0; l < L / 2; ++l) {
    detail::accumulate_pair(psi, l, out[static_cast<std::size_t>(l)]);
    out[static_cast<std::size_t>(l + L / 2)] = out[static_cast<std::size_t>(l)].swapped_sites();
  }
  return out;
}

// l1-norm of the off-diagonal part, one term per pair matrix.
inline double pair_coherence(const PairDensity& rho) noexcept {
  double c = 0.0;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b)
      if (a != b) c += std::abs(rho(a, b));
  return c;
}

// C = sum_l C_l. The inputs must already be ensemble averages.
inline double coherence(std::span<const PairDensity> rho_per_site) noexcept {
  double c = 0.0;
  for (const auto& r : rho_per_site) c += pair_coherence(r);
  return c;
}

struct Estimate {
  double value = NAN;
  double error = NAN;
  bool valid() const noexcept { return std::isfinite(value); }
};

// Delete-one-block jackknife. `estimator` maps a set of pooled sums to a
// value (NaN when undefined); `block_sums[b]` holds the sums from block b.
inline Estimate jackknife(const std::vector<std::vector<double>>& block_sums,
                          const std::function<double(const std::vector<double>&)>& estimator) {
  Estimate out;
  if (block_sums.empty()) return out;
  const std::size_t width = block_sums.front().size();
  std::vector<double> total(width, 0.0);
  for (const auto& b : block_sums)
    for (std::size_t k = 0; k < width; ++k) total[k] += b[k];
  out.value = estimator(total);
  const std::size_t n = block_sums.size();
  if (n < 2) return out;
  std::vector<double> loo(width);
  std::vector<double> values;
  values.reserve(n);
  for (const auto& b : block_sums) {
    for (std::size_t k = 0; k < width; ++k) loo[k] = total[k] - b[k];
    values.push_back(estimator(loo));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  out.error = std::sqrt(var * static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

}  // namespace aqf
