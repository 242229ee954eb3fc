#pragma once

// Classical two-species active lattice gas with synchronous updates, and the
// Kolmogorov cycle test of the elementary-rate model with biased hopping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/fock.hpp"
#include "aqf/model.hpp"
#include "aqf/rng.hpp"

namespace aqf::classical {

inline constexpr int kMaxChain = 1000000;

struct ClassicalParams {
  int L = 32;
  double K = 3.5;
  int r = 4;
  double scale = 0.1;  // global factor on every per-sweep probability

  void validate() const {
    if (L < 2 || L > kMaxChain) throw ParameterError("classical.L must lie in [2, 1000000]");
    if (!std::isfinite(K)) throw ParameterError("classical.K must be finite");
    if (r < 1 || r > L / 2) throw ParameterError("classical.r must lie in [1, L/2]");
    if (!(scale > 0.0 && scale <= 1.0)) throw ParameterError("classical.scale must lie in (0, 1]");
  }
};

// Occupations of an arbitrarily long ring, one byte per site and species.
struct ClassicalConfig {
  std::vector<std::uint8_t> up;
  std::vector<std::uint8_t> down;

  explicit ClassicalConfig(int L = 0)
      : up(static_cast<std::size_t>(L), 0), down(static_cast<std::size_t>(L), 0) {}

  int sites() const noexcept { return static_cast<int>(up.size()); }
  int m(int l) const noexcept {
    return int{up[static_cast<std::size_t>(l)]} - int{down[static_cast<std::size_t>(l)]};
  }
  std::uint8_t& n(int l, Spin s) noexcept {
    return (s == Spin::Up ? up : down)[static_cast<std::size_t>(l)];
  }
  std::uint8_t n(int l, Spin s) const noexcept {
    return (s == Spin::Up ? up : down)[static_cast<std::size_t>(l)];
  }
  int particles() const noexcept {
    int n = 0;
    for (std::size_t l = 0; l < up.size(); ++l) n += up[l] + down[l];
    return n;
  }
  int magnetization() const noexcept {
    int s = 0;
    for (int l = 0; l < sites(); ++l) s += m(l);
    return s;
  }
  friend bool operator==(const ClassicalConfig&, const ClassicalConfig&) = default;
};

// The first L/4 sites hold up+down pairs, the rest is empty.
inline ClassicalConfig paired_initial_state(int L) {
  ClassicalConfig c(L);
  for (int l = 0; l < L / 4; ++l) c.up[static_cast<std::size_t>(l)] = c.down[static_cast<std::size_t>(l)] = 1;
  return c;
}

inline double alignment_probability(const ClassicalConfig& c, int l, const ClassicalParams& p) {
  const int L = c.sites();
  int s = 0;
  for (int j = 1; j <= p.r; ++j) s += c.m(wrap(l + j, L)) + c.m(wrap(l - j, L));
  return std::exp(-p.K / (2.0 * p.r) * c.m(l) * s);
}

namespace detail {

struct Candidate {
  int from_site;
  Spin from_species;
  int to_site;
  Spin to_species;
};

}  // namespace detail

// One synchronous sweep. Every allowed move (up hops left, down hops right)
// and every allowed flip is a candidate, fired independently with
// probability min(1, scale * P) evaluated on the configuration before the
// sweep. Fired candidates are visited in random order; a candidate is
// accepted when its particle has not moved yet and its target slot has not
// been claimed, so each contested slot goes to one uniformly chosen
// candidate.
inline int classical_step(ClassicalConfig& c, const ClassicalParams& p, CounterRng& rng) {
  const int L = c.sites();
  std::vector<detail::Candidate> fired;
  for (int l = 0; l < L; ++l) {
    const int left = wrap(l - 1, L);
    const int right = wrap(l + 1, L);
    if (c.n(l, Spin::Up) && !c.n(left, Spin::Up) && rng.uniform() < p.scale)
      fired.push_back({l, Spin::Up, left, Spin::Up});
    if (c.n(l, Spin::Down) && !c.n(right, Spin::Down) && rng.uniform() < p.scale)
      fired.push_back({l, Spin::Down, right, Spin::Down});
    if (c.n(l, Spin::Up) != c.n(l, Spin::Down)) {
      const Spin from = c.n(l, Spin::Up) ? Spin::Up : Spin::Down;
      const double prob = std::min(1.0, p.scale * alignment_probability(c, l, p));
      if (rng.uniform() < prob) fired.push_back({l, from, l, flipped(from)});
    }
  }
  for (std::size_t i = fired.size(); i > 1; --i)
    std::swap(fired[i - 1], fired[rng.below(static_cast<std::uint32_t>(i))]);
  std::vector<std::uint8_t> moved(2 * static_cast<std::size_t>(L), 0);
  std::vector<std::uint8_t> claimed(2 * static_cast<std::size_t>(L), 0);
  const auto slot = [](int site, Spin s) { return 2 * static_cast<std::size_t>(site) + static_cast<std::size_t>(s); };
  std::vector<detail::Candidate> accepted;
  for (const auto& f : fired) {
    const auto src = slot(f.from_site, f.from_species);
    const auto dst = slot(f.to_site, f.to_species);
    if (moved[src] || claimed[dst]) continue;
    moved[src] = claimed[dst] = 1;
    accepted.push_back(f);
  }
  // Targets were free before the sweep, so vacating all sources first and
  // then filling all targets is order independent.
  for (const auto& f : accepted) c.n(f.from_site, f.from_species) = 0;
  for (const auto& f : accepted) c.n(f.to_site, f.to_species) = 1;
  return static_cast<int>(accepted.size());
}

// (sum_l m_l)^2 / L^2
inline double magnetization_sq(const ClassicalConfig& c) {
  const double M = c.magnetization();
  const double L = c.sites();
  return M * M / (L * L);
}

struct ClassicalRun {
  std::vector<long long> sweeps;   // recorded sweep numbers
  std::vector<double> m2_mean;     // ensemble mean of M^2 per recorded sweep
  std::vector<double> m2_stderr;
  std::uint64_t histories = 0;
};

// Ensemble of independent histories from the paired initial state. History i
// draws from CounterRng(seed, i, Classical); results do not depend on the
// thread count.
inline ClassicalRun run_classical(const ClassicalParams& p, std::uint64_t histories, long long sweeps,
                                  long long record_every, std::uint64_t seed, unsigned threads = 1) {
  p.validate();
  if (histories < 1) throw ParameterError("classical.histories must be positive");
  if (sweeps < 0) throw ParameterError("classical.sweeps must be >= 0");
  if (record_every < 1) throw ParameterError("classical.record_every must be positive");
  ClassicalRun out;
  for (long long s = 0; s <= sweeps; s += record_every) out.sweeps.push_back(s);
  const std::size_t nt = out.sweeps.size();
  std::vector<std::vector<double>> values(histories, std::vector<double>(nt));
  std::vector<std::exception_ptr> errors(threads == 0 ? 1 : threads);
  auto worker = [&](unsigned id, unsigned stride) {
    try {
      for (std::uint64_t h = id; h < histories; h += stride) {
        CounterRng rng(seed, h, Stream::Classical);
        ClassicalConfig c = paired_initial_state(p.L);
        const int n0 = c.particles();
        std::size_t k = 0;
        for (long long s = 0; s <= sweeps; ++s) {
          if (k < nt && out.sweeps[k] == s) values[h][k++] = magnetization_sq(c);
          if (s == sweeps) break;
          classical_step(c, p, rng);
          if (c.particles() != n0) throw StructuralError("classical sweep changed the particle number");
        }
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  out.histories = histories;
  out.m2_mean.assign(nt, 0.0);
  out.m2_stderr.assign(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    double s = 0.0, s2 = 0.0;
    for (const auto& v : values) {
      s += v[k];
      s2 += v[k] * v[k];
    }
    const double n = static_cast<double>(histories);
    const double mu = s / n;
    out.m2_mean[k] = mu;
    out.m2_stderr[k] = n > 1 ? std::sqrt(std::max(0.0, (s2 - n * mu * mu) / (n - 1)) / n) : 0.0;
  }
  return out;
}

// Mean of the recorded M^2 over sweeps in [from, to].
inline double window_average(const ClassicalRun& run, long long from, long long to) {
  double s = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < run.sweeps.size(); ++k)
    if (run.sweeps[k] >= from && run.sweeps[k] <= to) {
      s += run.m2_mean[k];
      ++n;
    }
  if (n == 0) throw ParameterError("no recorded sweeps inside the averaging window");
  return s / n;
}

inline void write_series(std::ostream& os, const ClassicalRun& run) {
  os << "sweep\tM2\tM2_stderr\n";
  for (std::size_t k = 0; k < run.sweeps.size(); ++k)
    os << run.sweeps[k] << '\t' << run.m2_mean[k] << '\t' << run.m2_stderr[k] << '\n';
}

// ---- Kolmogorov criterion ----

enum class TransitionKind { Hop, Flip };

// Hop: the `species` particle at `site` moves by `direction` (+1 right,
// -1 left). Flip: the particle at `site` changes from `species` to the other
// species (direction unused).
struct ElementaryTransition {
  TransitionKind kind = TransitionKind::Hop;
  int site = 0;
  Spin species = Spin::Up;
  int direction = 1;
};

struct CycleSpec {
  int L = 6;
  Mask start = 0;  // fock.hpp mask encoding
  std::vector<ElementaryTransition> steps;
  double epsilon = 0.0;
  double K = 0.0;
  int r = 1;
};

struct KolmogorovResult {
  double forward = 0.0;
  double backward = 0.0;
  double ratio = 0.0;  // forward / backward (inf when backward == 0)
};

// Rate of one elementary transition from configuration c; hops at
// Gamma (1 +- eps) / 2 (up favours left, down favours right), flips at
// Gamma exp(-K/(2r) m_l S_l) on the pre-flip configuration.
inline double elementary_rate(Mask c, const ElementaryTransition& t, const CycleSpec& spec, double gamma) {
  const int L = spec.L;
  if (t.kind == TransitionKind::Hop) {
    if (t.direction != 1 && t.direction != -1) throw StructuralError("hop direction must be +1 or -1");
    const int to = wrap(t.site + t.direction, L);
    if (!occupied(c, t.site, t.species) || occupied(c, to, t.species))
      throw StructuralError("cycle step " + std::string("hop") + " at site " + std::to_string(t.site) +
                            " is not allowed");
    const bool favoured = (t.species == Spin::Up) == (t.direction == -1);
    return gamma * (favoured ? 1.0 + spec.epsilon : 1.0 - spec.epsilon) / 2.0;
  }
  if (!occupied(c, t.site, t.species) || occupied(c, t.site, flipped(t.species)))
    throw StructuralError("cycle step flip at site " + std::to_string(t.site) + " is not allowed");
  const int x = local_magnetization(c, t.site) * neighbourhood_magnetization(c, t.site, spec.r, L);
  return gamma * std::exp(-spec.K / (2.0 * spec.r) * x);
}

inline Mask apply_transition(Mask c, const ElementaryTransition& t, int L) {
  if (t.kind == TransitionKind::Hop)
    return (c & ~mode_bit(t.site, t.species)) | mode_bit(wrap(t.site + t.direction, L), t.species);
  return c ^ site_bits(t.site);
}

inline ElementaryTransition reverse(const ElementaryTransition& t, int L) {
  if (t.kind == TransitionKind::Hop) return {TransitionKind::Hop, wrap(t.site + t.direction, L), t.species, -t.direction};
  return {TransitionKind::Flip, t.site, flipped(t.species), t.direction};
}

inline KolmogorovResult kolmogorov_rates(const CycleSpec& spec, double gamma) {
  if (spec.L < 2 || spec.L > kMaxSites) throw ParameterError("kolmogorov.L must lie in [2, 31]");
  if (spec.r < 1 || spec.r > spec.L / 2) throw ParameterError("kolmogorov.r must lie in [1, L/2]");
  if (!(spec.epsilon >= -1.0 && spec.epsilon <= 1.0)) throw ParameterError("kolmogorov.epsilon must lie in [-1, 1]");
  if (spec.steps.empty()) throw StructuralError("cycle has no transitions");
  std::vector<Mask> states{spec.start};
  KolmogorovResult out;
  out.forward = 1.0;
  for (const auto& t : spec.steps) {
    out.forward *= elementary_rate(states.back(), t, spec, gamma);
    states.push_back(apply_transition(states.back(), t, spec.L));
  }
  if (states.back() != spec.start) throw StructuralError("cycle does not return to its initial configuration");
  out.backward = 1.0;
  for (std::size_t k = spec.steps.size(); k-- > 0;)
    out.backward *= elementary_rate(states[k + 1], reverse(spec.steps[k], spec.L), spec, gamma);
  out.ratio = out.backward == 0.0 ? INFINITY : out.forward / out.backward;
  return out;
}

// Three neighbouring up particles on sites 1..3 of an otherwise empty ring
// of 6 sites, r = 1: site 3 flips to down, hops right, flips back and hops
// left to its origin.
inline CycleSpec canonical_cycle(double K, double epsilon) {
  CycleSpec s;
  s.L = 6;
  s.K = K;
  s.epsilon = epsilon;
  s.r = 1;
  for (int l = 1; l <= 3; ++l) s.start |= mode_bit(l, Spin::Up);
  s.steps = {{TransitionKind::Flip, 3, Spin::Up, 0},
             {TransitionKind::Hop, 3, Spin::Down, +1},
             {TransitionKind::Flip, 4, Spin::Down, 0},
             {TransitionKind::Hop, 4, Spin::Up, -1}};
  return s;
}

inline double closed_form_forward(double gamma, double K, double eps) {
  return std::pow(gamma, 4) * std::exp(-K / 2.0) * (1.0 + eps) * (1.0 + eps) / 4.0;
}

inline double closed_form_backward(double gamma, double K, double eps) {
  return std::pow(gamma, 4) * std::exp(K / 2.0) * (1.0 - eps) * (1.0 - eps) / 4.0;
}

}  // namespace aqf::classical
