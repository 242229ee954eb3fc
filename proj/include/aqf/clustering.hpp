#pragma once

// Projective snapshots of trajectory states and the density-peak clustering
// statistic gamma_l = rho_l * delta_l evaluated on one particle species.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/fock.hpp"
#include "aqf/model.hpp"
#include "aqf/observables.hpp"
#include "aqf/rng.hpp"

namespace aqf {

struct Snapshot {
  Mask configuration = 0;
  double time = 0.0;
  std::uint64_t trajectory = 0;
  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

// Born-rule draw by inverse CDF over the amplitude array.
template <ConfigurationView State>
Mask sample_configuration(const State& psi, double u) {
  double total = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) total += std::norm(psi.amplitude(i));
  const double target = u * total;
  double acc = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double w = std::norm(psi.amplitude(i));
    if (w == 0.0) continue;
    last_nonzero = i;
    acc += w;
    if (target < acc) return psi.configuration(i);
  }
  return psi.configuration(last_nonzero);
}

template <ConfigurationView State>
Snapshot sample_snapshot(const State& psi, CounterRng& rng, double time = 0.0, std::uint64_t trajectory = 0) {
  return {sample_configuration(psi, rng.uniform()), time, trajectory};
}

struct ClusterStats {
  std::vector<double> gamma;  // one entry per site
  std::vector<int> density;   // rho_l
  Spin species = Spin::Down;
  int d_c = 4;
};

// rho_l = n_l * sum_{|m-l| < d_c} n_m (periodic, includes m = l);
// delta_l = distance to the nearest site of strictly higher rho, L/2 for every
// site attaining the maximum.
inline ClusterStats cluster_gamma(Mask c, int L, Spin species, int d_c) {
  if (d_c < 1 || d_c > std::max(1, L / 2)) throw ParameterError("clustering.d_c must lie in [1, L/2]");
  ClusterStats out;
  out.species = species;
  out.d_c = d_c;
  out.gamma.assign(static_cast<std::size_t>(L), 0.0);
  out.density.assign(static_cast<std::size_t>(L), 0);
  std::vector<int> n(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) n[static_cast<std::size_t>(l)] = occupied(c, l, species) ? 1 : 0;
  int rho_max = 0;
  for (int l = 0; l < L; ++l) {
    if (!n[static_cast<std::size_t>(l)]) continue;
    int s = 0;
    for (int m = 0; m < L; ++m)
      if (ring_distance(l, m, L) < d_c) s += n[static_cast<std::size_t>(m)];
    out.density[static_cast<std::size_t>(l)] = s;
    rho_max = std::max(rho_max, s);
  }
  for (int l = 0; l < L; ++l) {
    const int rho = out.density[static_cast<std::size_t>(l)];
    if (rho == 0) continue;
    int delta = L / 2;
    if (rho < rho_max) {
      for (int m = 0; m < L; ++m)
        if (out.density[static_cast<std::size_t>(m)] > rho) delta = std::min(delta, ring_distance(l, m, L));
    }
    out.gamma[static_cast<std::size_t>(l)] = static_cast<double>(rho) * delta;
  }
  return out;
}

inline double gamma_max(int L) noexcept { return static_cast<double>(L) * L / 4.0; }

struct Histogram {
  std::vector<double> edges;    // bins + 1 entries
  std::vector<double> density;  // normalized: sum density * width = 1
  std::uint64_t samples = 0;

  double width(std::size_t k) const noexcept { return edges[k + 1] - edges[k]; }
  double center(std::size_t k) const noexcept { return 0.5 * (edges[k] + edges[k + 1]); }
  double mass(std::size_t k) const noexcept { return density[k] * width(k); }
  std::size_t bins() const noexcept { return density.size(); }
};

// Which sites contribute gamma values to the histogram.
enum class SitePool { All, Occupied };

// P(gamma) over [0, gamma_max] with uniform bins, pooled over every input.
inline Histogram gamma_histogram(std::span<const ClusterStats> stats, int bins, double gmax,
                                 SitePool pool = SitePool::All) {
  if (stats.empty()) throw ParameterError("gamma_histogram: no cluster statistics given");
  if (bins < 1) throw ParameterError("gamma_histogram: bins must be positive");
  if (!(gmax > 0.0)) throw ParameterError("gamma_histogram: gamma_max must be positive");
  Histogram h;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) h.edges[static_cast<std::size_t>(k)] = gmax * k / bins;
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
  for (const auto& s : stats) {
    for (std::size_t l = 0; l < s.gamma.size(); ++l) {
      if (pool == SitePool::Occupied && s.density[l] == 0) continue;
      const double g = std::clamp(s.gamma[l], 0.0, gmax);
      auto k = static_cast<std::size_t>(g / gmax * bins);
      if (k >= counts.size()) k = counts.size() - 1;
      ++counts[k];
      ++h.samples;
    }
  }
  if (h.samples == 0) throw ParameterError("gamma_histogram: no sites in the selected pool");
  h.density.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    h.density[k] = static_cast<double>(counts[k]) / (static_cast<double>(h.samples) * h.width(k));
  return h;
}

// Two columns: bin center, density.
inline void write_histogram(std::ostream& os, const Histogram& h) {
  os << "gamma_center\tdensity\n";
  for (std::size_t k = 0; k < h.bins(); ++k) os << h.center(k) << '\t' << h.density[k] << '\n';
}

}  // namespace aqf
