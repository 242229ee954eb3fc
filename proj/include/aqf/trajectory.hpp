#pragma once

// Quantum-jump unraveling of the Lindblad equation.
//
// Each step of length dt either executes one jump (probability
// sum_a Gamma_a <X_a^+ X_a> dt, channel chosen by cumulative probability) or
// propagates with the linear non-Hermitian generator
//
//   G = -i H - 1/2 sum_a Gamma_a X_a^+ X_a
//
// followed by renormalization. Every X_a^+ X_a is diagonal in the
// configuration basis (each jump maps a configuration to at most one other),
// so G is a diagonal decay plus the off-diagonal spin-flip Hamiltonian.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aqf/clustering.hpp"
#include "aqf/error.hpp"
#include "aqf/fock.hpp"
#include "aqf/model.hpp"
#include "aqf/observables.hpp"
#include "aqf/rng.hpp"
#include "aqf/sector.hpp"

namespace aqf {

enum class InitialState { PlusProduct, PairProduct };

inline std::string to_string(InitialState s) {
  return s == InitialState::PlusProduct ? "plus_product" : "pair_product";
}

inline InitialState parse_initial_state(const std::string& s) {
  if (s == "plus_product") return InitialState::PlusProduct;
  if (s == "pair_product") return InitialState::PairProduct;
  throw ParameterError("unknown initial state '" + s + "' (plus_product|pair_product)");
}

// PlusProduct: sites 0..N-1 each hold (|up> + |down>)/sqrt(2).
// PairProduct: sites 0..N/2-1 each hold an up+down pair.
inline StateVector initial_state(std::shared_ptr<const FockBasis> basis, InitialState which) {
  const int L = basis->sites();
  const int N = basis->particles();
  StateVector psi(basis);
  if (which == InitialState::PlusProduct) {
    if (N > L) throw ParameterError("plus_product initial state needs N <= L");
    const double amp = std::pow(2.0, -0.5 * N);
    for (std::uint64_t spins = 0; spins < (std::uint64_t{1} << N); ++spins) {
      Mask c = 0;
      for (int l = 0; l < N; ++l) c |= mode_bit(l, (spins >> l) & 1u ? Spin::Down : Spin::Up);
      psi[basis->index_of(c)] = amp;
    }
  } else {
    if (N % 2 != 0 || N / 2 > L) throw ParameterError("pair_product initial state needs even N <= 2L");
    Mask c = 0;
    for (int l = 0; l < N / 2; ++l) c |= site_bits(l);
    psi[basis->index_of(c)] = 1.0;
  }
  return psi;
}

// Precomputed, immutable tables for one (basis, model) pair. Shareable across
// concurrent trajectories.
class Propagator {
 public:
  // One entry per singly-occupied site of a configuration: the spin-flipped
  // partner configuration and the alignment weight of that flip.
  struct Flip {
    std::uint32_t partner;
    std::uint32_t site;
    double weight;
  };

  Propagator(std::shared_ptr<const FockBasis> basis, const ModelParams& params)
      : basis_(std::move(basis)), params_(params), channels_(jump_channels(params.L)) {
    params_.validate();
    require_compatible(*basis_, params_);
    const FockBasis& b = *basis_;
    const int L = params_.L;
    if (b.size() > 0xFFFFFFFFull) throw ResourceError("Propagator: basis too large for 32-bit indices");
    offsets_.reserve(b.size() + 1);
    decay_.resize(b.size());
    magnetization_.resize(b.size());
    offsets_.push_back(0);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const Mask c = b[i];
      double rate = 0.0;
      for (int l = 0; l < L; ++l) {
        const unsigned s = local_state(c, l);
        if (s == 1u || s == 2u) {
          const Spin target = s == 1u ? Spin::Down : Spin::Up;
          const double w = alignment_weight(c, l, target, params_);
          flips_.push_back({static_cast<std::uint32_t>(b.rank(c ^ site_bits(l))), static_cast<std::uint32_t>(l), w});
          rate += params_.gamma_A * w * w;
        }
        const int next = wrap(l + 1, L);
        if (occupied(c, next, Spin::Up) && !occupied(c, l, Spin::Up)) rate += params_.gamma_M;
        if (occupied(c, l, Spin::Down) && !occupied(c, next, Spin::Down)) rate += params_.gamma_M;
      }
      offsets_.push_back(static_cast<std::uint32_t>(flips_.size()));
      decay_[i] = 0.5 * rate;
      magnetization_[i] = static_cast<std::int8_t>(magnetization(c));
    }
  }

  const FockBasis& basis() const noexcept { return *basis_; }
  const std::shared_ptr<const FockBasis>& basis_ptr() const noexcept { return basis_; }
  const ModelParams& params() const noexcept { return params_; }
  const std::vector<JumpChannel>& channels() const noexcept { return channels_; }
  std::span<const double> decay() const noexcept { return decay_; }
  std::span<const std::int8_t> magnetizations() const noexcept { return magnetization_; }
  std::span<const Flip> flips_of(std::size_t i) const noexcept {
    return {flips_.data() + offsets_[i], flips_.data() + offsets_[i + 1]};
  }

  // out = G in
  void apply_generator(std::span<const Amplitude> in, std::span<Amplitude> out) const noexcept {
    const double h = params_.h;
    for (std::size_t i = 0; i < in.size(); ++i) {
      Amplitude s{};
      for (std::uint32_t k = offsets_[i]; k < offsets_[i + 1]; ++k) s += in[flips_[k].partner];
      out[i] = Amplitude(-h * s.imag(), h * s.real()) - decay_[i] * in[i];
    }
  }

  // sum_a Gamma_a <psi|X_a^+ X_a|psi> / <psi|psi>
  double total_rate(const StateVector& psi) const noexcept {
    double r = 0.0, n = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double w = std::norm(psi[i]);
      r += w * decay_[i];
      n += w;
    }
    return 2.0 * r / n;
  }

  // Entry a = Gamma_a <psi|X_a^+ X_a|psi> dt, channel order of jump_channels().
  std::vector<double> jump_probabilities(const StateVector& psi, double dt) const {
    const int L = params_.L;
    std::vector<double> p(channels_.size(), 0.0);
    const FockBasis& b = *basis_;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double w = std::norm(psi[i]);
      if (w == 0.0) continue;
      const Mask c = b[i];
      for (int l = 0; l < L; ++l) {
        const int next = wrap(l + 1, L);
        if (occupied(c, next, Spin::Up) && !occupied(c, l, Spin::Up)) p[static_cast<std::size_t>(2 * l)] += w;
        if (occupied(c, l, Spin::Down) && !occupied(c, next, Spin::Down)) p[static_cast<std::size_t>(2 * l + 1)] += w;
      }
      for (const Flip& f : flips_of(i)) {
        // A flip on a site holding only down is a flip into up (species index 0).
        const bool into_up = occupied(c, static_cast<int>(f.site), Spin::Down);
        p[static_cast<std::size_t>(2 * L + 2 * static_cast<int>(f.site) + (into_up ? 0 : 1))] += w * f.weight * f.weight;
      }
    }
    for (std::size_t a = 0; a < p.size(); ++a) p[a] *= channel_rate(channels_[a], params_) * dt;
    return p;
  }

  // X_a |psi>, unnormalized.
  StateVector apply(const StateVector& psi, const JumpChannel& ch) const { return apply_jump(psi, ch, params_); }

 private:
  std::shared_ptr<const FockBasis> basis_;
  ModelParams params_;
  std::vector<JumpChannel> channels_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Flip> flips_;
  std::vector<double> decay_;
  std::vector<std::int8_t> magnetization_;
};

inline constexpr double kNormUnderflow = 1e-14;

namespace detail {

// Adaptive step shared by both engines: halves dt while the total jump
// probability reaches the bound or the norm underflows. Returns the number of
// jumps executed.
template <class Engine, class State, class Rng>
int adaptive_advance(Engine& e, State& psi, double dt, Rng& rng, int depth) {
  if (depth > 30) throw IntegrationError("step size underflow", 0.0);
  if (e.current_rate() * dt >= e.max_step_probability())
    return adaptive_advance(e, psi, 0.5 * dt, rng, depth + 1) + adaptive_advance(e, psi, 0.5 * dt, rng, depth + 1);
  const double u = rng.uniform();
  if (u < e.current_rate() * dt) return e.step(psi, dt, u) ? 1 : 0;
  const auto backup = psi.amplitudes;
  try {
    e.evolve_deterministic(psi, dt);
  } catch (const IntegrationError&) {
    psi.amplitudes = backup;
    e.reset(psi);
    return adaptive_advance(e, psi, 0.5 * dt, rng, depth + 1) + adaptive_advance(e, psi, 0.5 * dt, rng, depth + 1);
  }
  return 0;
}

// Index of the channel selected by u among cumulative probabilities.
inline std::size_t select_channel(const std::vector<double>& probs, double u) {
  std::size_t chosen = probs.size();
  double cum = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    cum += probs[a];
    chosen = a;
    if (u < cum) break;
  }
  if (chosen == probs.size()) throw IntegrationError("jump selected but every channel is closed", 0.0);
  return chosen;
}

}  // namespace detail

// Per-trajectory integrator over the whole fixed-N basis: scratch buffers plus
// the cached total jump rate of the current state. Not shareable between
// threads.
class Stepper {
 public:
  explicit Stepper(const Propagator& prop, double max_step_probability = 0.1)
      : prop_(prop), pmax_(max_step_probability), acc_(prop.basis().size()), ya_(prop.basis().size()),
        yb_(prop.basis().size()) {}

  // Must be called after any external modification of psi.
  void reset(const StateVector& psi) { rate_ = prop_.total_rate(psi); }
  double current_rate() const noexcept { return rate_; }
  double max_step_probability() const noexcept { return pmax_; }

  std::vector<double> jump_probabilities(const StateVector& psi, double dt) const {
    return prop_.jump_probabilities(psi, dt);
  }

  // Deterministic no-jump evolution over dt with RK4, then renormalization.
  // Throws IntegrationError when the norm underflows.
  void evolve_deterministic(StateVector& psi, double dt) {
    auto& y = psi.amplitudes;
    const std::size_t n = y.size();
    const auto& decay = prop_.decay();
    // Stages 1..3: k = G y_in; acc += w k; y_out = psi + c k.
    stage(y, y, ya_, dt / 6.0, 0.5 * dt, true);
    stage(ya_, y, yb_, dt / 3.0, 0.5 * dt, false);
    stage(yb_, y, ya_, dt / 3.0, dt, false);
    // Stage 4 writes the result and measures norm and rate in the same pass.
    const double h = prop_.params().h;
    double nrm = 0.0, rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Amplitude s{};
      for (const auto& f : prop_.flips_of(i)) s += ya_[f.partner];
      const Amplitude k = Amplitude(-h * s.imag(), h * s.real()) - decay[i] * ya_[i];
      const Amplitude out = acc_[i] + (dt / 6.0) * k;
      acc_[i] = out;
      const double w = std::norm(out);
      nrm += w;
      rate += w * decay[i];
    }
    if (!(nrm >= kNormUnderflow * kNormUnderflow) || !std::isfinite(nrm))
      throw IntegrationError("norm underflow in deterministic evolution", 0.0);
    const double inv = 1.0 / std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) y[i] = acc_[i] * inv;
    rate_ = 2.0 * rate / nrm;
  }

  // One first-order step with a supplied uniform variate u in [0, 1).
  // Returns the executed jump, if any.
  std::optional<JumpChannel> step(StateVector& psi, double dt, double u) {
    if (u < rate_ * dt) {
      const JumpChannel ch = prop_.channels()[detail::select_channel(prop_.jump_probabilities(psi, dt), u)];
      StateVector image = prop_.apply(psi, ch);
      if (image.norm_squared() == 0.0) throw IntegrationError("selected jump channel annihilates the state", 0.0);
      image.normalize();
      psi.amplitudes.swap(image.amplitudes);
      reset(psi);
      return ch;
    }
    evolve_deterministic(psi, dt);
    return std::nullopt;
  }

  int advance(StateVector& psi, double dt, CounterRng& rng, int depth = 0) {
    return detail::adaptive_advance(*this, psi, dt, rng, depth);
  }

 private:
  void stage(const std::vector<Amplitude>& in, const std::vector<Amplitude>& psi, std::vector<Amplitude>& next,
             double acc_weight, double next_weight, bool first) {
    const auto& decay = prop_.decay();
    const double h = prop_.params().h;
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      Amplitude s{};
      for (const auto& f : prop_.flips_of(i)) s += in[f.partner];
      const Amplitude k = Amplitude(-h * s.imag(), h * s.real()) - decay[i] * in[i];
      acc_[i] = (first ? psi[i] : acc_[i]) + acc_weight * k;
      next[i] = psi[i] + next_weight * k;
    }
  }

  const Propagator& prop_;
  double pmax_;
  double rate_ = 0.0;
  std::vector<Amplitude> acc_, ya_, yb_;
};

// Same scheme restricted to the occupation pattern of the current state.
// Tables (decay, flip weights) are rebuilt whenever a motion jump moves the
// state into a new pattern.
class SectorStepper {
 public:
  explicit SectorStepper(const ModelParams& params, double max_step_probability = 0.1)
      : params_(params), pmax_(max_step_probability), channels_(jump_channels(params.L)) {
    params_.validate();
  }

  const ModelParams& params() const noexcept { return params_; }
  double current_rate() const noexcept { return rate_; }
  double max_step_probability() const noexcept { return pmax_; }

  void reset(const SectorState& psi) {
    if (!(psi.sector == sector_)) rebuild(psi.sector);
    double r = 0.0, n = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double w = std::norm(psi.amplitudes[i]);
      r += w * decay_[i];
      n += w;
    }
    rate_ = 2.0 * r / n;
  }

  std::vector<double> jump_probabilities(const SectorState& psi, double dt) const {
    const int L = params_.L;
    const std::size_t s = sector_.singles().size();
    std::vector<double> p(channels_.size(), 0.0);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double w = std::norm(psi.amplitudes[i]);
      if (w == 0.0) continue;
      const Mask c = sector_.configuration(i);
      for (int l = 0; l < L; ++l) {
        const int next = wrap(l + 1, L);
        if (occupied(c, next, Spin::Up) && !occupied(c, l, Spin::Up)) p[static_cast<std::size_t>(2 * l)] += w;
        if (occupied(c, l, Spin::Down) && !occupied(c, next, Spin::Down)) p[static_cast<std::size_t>(2 * l + 1)] += w;
      }
      for (std::size_t j = 0; j < s; ++j) {
        const double f = weights_[i * s + j];
        // Spin bit 1 (down) flips into up, species index 0.
        const std::size_t into = (i >> j) & 1u ? 0 : 1;
        p[static_cast<std::size_t>(2 * L + 2 * sector_.singles()[j]) + into] += w * f * f;
      }
    }
    for (std::size_t a = 0; a < p.size(); ++a) p[a] *= channel_rate(channels_[a], params_) * dt;
    return p;
  }

  void evolve_deterministic(SectorState& psi, double dt) {
    auto& y = psi.amplitudes;
    const std::size_t n = y.size();
    k1_.resize(n);
    k2_.resize(n);
    tmp_.resize(n);
    acc_.resize(n);
    apply_generator(y, k1_);
    for (std::size_t i = 0; i < n; ++i) {
      acc_[i] = y[i] + (dt / 6.0) * k1_[i];
      tmp_[i] = y[i] + (0.5 * dt) * k1_[i];
    }
    apply_generator(tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) {
      acc_[i] += (dt / 3.0) * k2_[i];
      tmp_[i] = y[i] + (0.5 * dt) * k2_[i];
    }
    apply_generator(tmp_, k1_);
    for (std::size_t i = 0; i < n; ++i) {
      acc_[i] += (dt / 3.0) * k1_[i];
      tmp_[i] = y[i] + dt * k1_[i];
    }
    apply_generator(tmp_, k2_);
    double nrm = 0.0, rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc_[i] += (dt / 6.0) * k2_[i];
      const double w = std::norm(acc_[i]);
      nrm += w;
      rate += w * decay_[i];
    }
    if (!(nrm >= kNormUnderflow * kNormUnderflow) || !std::isfinite(nrm))
      throw IntegrationError("norm underflow in deterministic evolution", 0.0);
    const double inv = 1.0 / std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) y[i] = acc_[i] * inv;
    rate_ = 2.0 * rate / nrm;
  }

  std::optional<JumpChannel> step(SectorState& psi, double dt, double u) {
    if (u < rate_ * dt) {
      const JumpChannel ch = channels_[detail::select_channel(jump_probabilities(psi, dt), u)];
      SectorState image;
      bool started = false;
      for (std::size_t i = 0; i < psi.size(); ++i) {
        if (psi.amplitudes[i] == Amplitude{}) continue;
        const auto t = apply_channel(psi.configuration(i), ch, params_);
        if (!t) continue;
        if (!started) {
          image = SectorState(psi.sector.contains(t->target) ? psi.sector : Sector::of(t->target, params_.L));
          started = true;
        }
        image.amplitudes[image.sector.index(t->target)] += t->amplitude * psi.amplitudes[i];
      }
      if (!started || image.norm_squared() == 0.0)
        throw IntegrationError("selected jump channel annihilates the state", 0.0);
      const double inv = 1.0 / std::sqrt(image.norm_squared());
      for (auto& a : image.amplitudes) a *= inv;
      psi = std::move(image);
      reset(psi);
      return ch;
    }
    evolve_deterministic(psi, dt);
    return std::nullopt;
  }

  int advance(SectorState& psi, double dt, CounterRng& rng, int depth = 0) {
    return detail::adaptive_advance(*this, psi, dt, rng, depth);
  }

 private:
  void rebuild(const Sector& sector) {
    sector_ = sector;
    const int L = params_.L;
    const std::size_t s = sector.singles().size();
    const std::size_t n = sector.size();
    decay_.assign(n, 0.0);
    weights_.assign(n * s, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Mask c = sector.configuration(i);
      double rate = 0.0;
      for (std::size_t j = 0; j < s; ++j) {
        const Spin target = (i >> j) & 1u ? Spin::Up : Spin::Down;
        const double w = alignment_weight(c, sector.singles()[j], target, params_);
        weights_[i * s + j] = w;
        rate += params_.gamma_A * w * w;
      }
      for (int l = 0; l < L; ++l) {
        const int next = wrap(l + 1, L);
        if (occupied(c, next, Spin::Up) && !occupied(c, l, Spin::Up)) rate += params_.gamma_M;
        if (occupied(c, l, Spin::Down) && !occupied(c, next, Spin::Down)) rate += params_.gamma_M;
      }
      decay_[i] = 0.5 * rate;
    }
  }

  // out = G in: spin flips of every single site couple i to i ^ (1 << j).
  void apply_generator(const std::vector<Amplitude>& in, std::vector<Amplitude>& out) const noexcept {
    const double h = params_.h;
    const std::size_t s = sector_.singles().size();
    for (std::size_t i = 0; i < in.size(); ++i) {
      Amplitude sum{};
      for (std::size_t j = 0; j < s; ++j) sum += in[i ^ (std::size_t{1} << j)];
      out[i] = Amplitude(-h * sum.imag(), h * sum.real()) - decay_[i] * in[i];
    }
  }

  ModelParams params_;
  double pmax_;
  std::vector<JumpChannel> channels_;
  Sector sector_;
  std::vector<double> decay_, weights_;
  double rate_ = 0.0;
  std::vector<Amplitude> k1_, k2_, tmp_, acc_;
};

// Pattern of the built-in initial states, with the matching amplitudes.
inline SectorState initial_sector_state(const ModelParams& p, InitialState which) {
  const int L = p.L;
  const int N = p.N;
  if (which == InitialState::PlusProduct) {
    if (N > L) throw ParameterError("plus_product initial state needs N <= L");
    Mask c = 0;
    for (int l = 0; l < N; ++l) c |= mode_bit(l, Spin::Up);
    SectorState psi(Sector::of(c, L));
    const double amp = std::pow(2.0, -0.5 * N);
    for (auto& a : psi.amplitudes) a = amp;
    return psi;
  }
  if (N % 2 != 0 || N / 2 > L) throw ParameterError("pair_product initial state needs even N <= 2L");
  Mask c = 0;
  for (int l = 0; l < N / 2; ++l) c |= site_bits(l);
  SectorState psi(Sector::of(c, L));
  psi.amplitudes[0] = 1.0;
  return psi;
}

enum class Engine { Auto, Full, Sector };

inline std::string to_string(Engine e) {
  switch (e) {
    case Engine::Auto: return "auto";
    case Engine::Full: return "full";
    case Engine::Sector: return "sector";
  }
  return "?";
}

inline Engine parse_engine(const std::string& s) {
  if (s == "auto") return Engine::Auto;
  if (s == "full") return Engine::Full;
  if (s == "sector") return Engine::Sector;
  throw ParameterError("unknown engine '" + s + "' (auto|full|sector)");
}

struct TrajectoryConfig {
  double dt = 0.01;
  double t_max = 70.0;
  std::uint64_t seed = 1;
  InitialState initial_state = InitialState::PlusProduct;
  double max_step_probability = 0.1;
  Engine engine = Engine::Auto;
  std::vector<double> sample_times;     // moments of M
  std::vector<double> snapshot_times;   // projective snapshots
  std::vector<double> coherence_times;  // two-site reduced density matrices
  std::vector<double> density_times;    // full |psi><psi| (small bases only)

  static std::vector<double> grid(double start, double stop, double step) {
    std::vector<double> out;
    if (!(step > 0.0)) return out;
    const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    for (long long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
  }

  // Step index of time t on the dt grid; t must be a multiple of dt.
  long long step_index(double t) const {
    const double k = t / dt;
    const long long ki = std::llround(k);
    if (std::abs(k - static_cast<double>(ki)) > 1e-6) {
      throw ParameterError("time " + std::to_string(t) + " is not a multiple of trajectory.dt");
    }
    return ki;
  }

  void validate() const {
    if (!(dt > 0.0)) throw ParameterError("trajectory.dt must be positive");
    if (!(t_max >= 0.0)) throw ParameterError("trajectory.t_max must be >= 0");
    if (!(max_step_probability > 0.0 && max_step_probability <= 1.0))
      throw ParameterError("trajectory.max_step_probability must lie in (0, 1]");
    for (const auto* times : {&sample_times, &snapshot_times, &coherence_times, &density_times}) {
      double prev = -1.0;
      for (double t : *times) {
        if (t < 0.0 || t > t_max + 1e-9) throw ParameterError("observation time outside [0, t_max]");
        if (t <= prev) throw ParameterError("observation times must be strictly increasing");
        prev = t;
        step_index(t);
      }
    }
  }
};

struct TrajectoryRecord {
  std::uint64_t index = 0;
  std::vector<Moments> moments;                    // per sample time
  std::vector<std::vector<PairDensity>> reduced;   // per coherence time, per site
  std::vector<Snapshot> snapshots;
  std::vector<std::vector<Amplitude>> states;      // per density time
  std::uint64_t jumps = 0;
};

namespace detail {

template <class Engine, class State, class ToFull>
TrajectoryRecord run_trajectory_with(Engine& engine, State psi, const TrajectoryConfig& cfg, std::uint64_t index,
                                     const ToFull& to_full) {
  TrajectoryRecord rec;
  rec.index = index;
  engine.reset(psi);
  CounterRng jumps(cfg.seed, index, Stream::Jumps);
  CounterRng snaps(cfg.seed, index, Stream::Snapshots);

  const auto to_steps = [&](const std::vector<double>& ts) {
    std::vector<long long> ks;
    ks.reserve(ts.size());
    for (double t : ts) ks.push_back(cfg.step_index(t));
    return ks;
  };
  const auto sample_k = to_steps(cfg.sample_times);
  const auto snap_k = to_steps(cfg.snapshot_times);
  const auto coh_k = to_steps(cfg.coherence_times);
  const auto dens_k = to_steps(cfg.density_times);
  std::size_t is = 0, isn = 0, ic = 0, id = 0;
  const long long last = cfg.step_index(cfg.t_max);
  if (!coh_k.empty() && psi.sites() % 2 != 0) throw ParameterError("coherence needs an even number of sites");

  for (long long k = 0;; ++k) {
    if (is < sample_k.size() && sample_k[is] == k) {
      rec.moments.push_back(magnetization_moments(psi));
      ++is;
    }
    if (isn < snap_k.size() && snap_k[isn] == k) {
      rec.snapshots.push_back(sample_snapshot(psi, snaps, static_cast<double>(k) * cfg.dt, index));
      ++isn;
    }
    if (ic < coh_k.size() && coh_k[ic] == k) {
      rec.reduced.push_back(reduced_two_site_all(psi));
      ++ic;
    }
    if (id < dens_k.size() && dens_k[id] == k) {
      rec.states.push_back(to_full(psi));
      ++id;
    }
    if (k >= last) break;
    try {
      rec.jumps += static_cast<std::uint64_t>(engine.advance(psi, cfg.dt, jumps));
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string(e.what()) + " (trajectory " + std::to_string(index) + ")",
                             static_cast<double>(k) * cfg.dt);
    }
  }
  return rec;
}

}  // namespace detail

// Full-basis engine. Deterministic in (propagator, config, index).
inline TrajectoryRecord run_trajectory(const Propagator& prop, const TrajectoryConfig& cfg, std::uint64_t index) {
  Stepper stepper(prop, cfg.max_step_probability);
  return detail::run_trajectory_with(stepper, initial_state(prop.basis_ptr(), cfg.initial_state), cfg, index,
                                     [](const StateVector& psi) { return psi.amplitudes; });
}

// Sector engine. `basis` is only needed when full states are recorded
// (cfg.density_times non-empty). Uses the same random streams as the full
// engine, so both produce the same trajectory up to rounding.
inline TrajectoryRecord run_sector_trajectory(const ModelParams& params, const TrajectoryConfig& cfg,
                                              std::uint64_t index,
                                              const std::shared_ptr<const FockBasis>& basis = nullptr) {
  if (!cfg.density_times.empty() && !basis) throw StructuralError("recording full states needs a basis");
  SectorStepper stepper(params, cfg.max_step_probability);
  return detail::run_trajectory_with(stepper, initial_sector_state(params, cfg.initial_state), cfg, index,
                                     [&](const SectorState& psi) { return psi.to_full(basis).amplitudes; });
}

inline TrajectoryRecord run_trajectory(const ModelParams& params, const TrajectoryConfig& cfg, std::uint64_t index = 0) {
  if (cfg.engine == Engine::Full) {
    auto basis = std::make_shared<const FockBasis>(params.L, params.N);
    const Propagator prop(basis, params);
    return run_trajectory(prop, cfg, index);
  }
  std::shared_ptr<const FockBasis> basis;
  if (!cfg.density_times.empty()) basis = std::make_shared<const FockBasis>(params.L, params.N);
  return run_sector_trajectory(params, cfg, index, basis);
}

}  // namespace aqf
