#pragma once

// Trajectory-ensemble statistics.
//
// Sums are kept per jackknife block (block = trajectory index mod B). Merging
// two series adds block by block, so it is commutative, and the merged result
// does not depend on which worker produced which block.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/observables.hpp"
#include "aqf/trajectory.hpp"

namespace aqf {

struct TimeSums {
  double count = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  double m1sq = 0.0;
  double m2sq = 0.0;
};

class ObservableSeries {
 public:
  static constexpr std::size_t kMaxDensityDimension = 512;

  ObservableSeries(const TrajectoryConfig& cfg, int L, std::size_t dim, int blocks = 20)
      : sample_times_(cfg.sample_times),
        coherence_times_(cfg.coherence_times),
        density_times_(cfg.density_times),
        L_(L),
        dim_(dim),
        blocks_(static_cast<std::size_t>(blocks)) {
    if (blocks < 1) throw ParameterError("ensemble needs at least one jackknife block");
    if (!density_times_.empty() && dim > kMaxDensityDimension)
      throw ResourceError("density-matrix accumulation limited to dimension " + std::to_string(kMaxDensityDimension));
    for (auto& b : blocks_) {
      b.moments.assign(sample_times_.size(), TimeSums{});
      b.reduced.assign(coherence_times_.size(), std::vector<PairDensity>(static_cast<std::size_t>(L)));
      b.density.assign(density_times_.size(), std::vector<Amplitude>(density_times_.empty() ? 0 : dim * dim));
    }
  }

  void add(const TrajectoryRecord& rec) {
    if (rec.moments.size() != sample_times_.size() || rec.reduced.size() != coherence_times_.size() ||
        rec.states.size() != density_times_.size())
      throw StructuralError("trajectory record does not match the series layout");
    Block& b = blocks_[rec.index % blocks_.size()];
    ++b.trajectories;
    for (std::size_t k = 0; k < rec.moments.size(); ++k) {
      const Moments& m = rec.moments[k];
      TimeSums& s = b.moments[k];
      s.count += 1.0;
      s.m1 += m.m1;
      s.m2 += m.m2;
      s.m4 += m.m4;
      s.m1sq += m.m1 * m.m1;
      s.m2sq += m.m2 * m.m2;
    }
    for (std::size_t k = 0; k < rec.reduced.size(); ++k)
      for (std::size_t l = 0; l < rec.reduced[k].size(); ++l) b.reduced[k][l] += rec.reduced[k][l];
    for (std::size_t k = 0; k < rec.states.size(); ++k) {
      const auto& psi = rec.states[k];
      auto& rho = b.density[k];
      for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) rho[i * dim_ + j] += psi[i] * std::conj(psi[j]);
    }
    snapshots_.insert(snapshots_.end(), rec.snapshots.begin(), rec.snapshots.end());
    sorted_ = false;
  }

  void merge(const ObservableSeries& o) {
    if (o.blocks_.size() != blocks_.size() || o.sample_times_ != sample_times_ ||
        o.coherence_times_ != coherence_times_ || o.density_times_ != density_times_ || o.L_ != L_ || o.dim_ != dim_)
      throw StructuralError("cannot merge observable series with different layouts");
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      Block& a = blocks_[bi];
      const Block& b = o.blocks_[bi];
      a.trajectories += b.trajectories;
      for (std::size_t k = 0; k < a.moments.size(); ++k) {
        a.moments[k].count += b.moments[k].count;
        a.moments[k].m1 += b.moments[k].m1;
        a.moments[k].m2 += b.moments[k].m2;
        a.moments[k].m4 += b.moments[k].m4;
        a.moments[k].m1sq += b.moments[k].m1sq;
        a.moments[k].m2sq += b.moments[k].m2sq;
      }
      for (std::size_t k = 0; k < a.reduced.size(); ++k)
        for (std::size_t l = 0; l < a.reduced[k].size(); ++l) a.reduced[k][l] += b.reduced[k][l];
      for (std::size_t k = 0; k < a.density.size(); ++k)
        for (std::size_t i = 0; i < a.density[k].size(); ++i) a.density[k][i] += b.density[k][i];
    }
    snapshots_.insert(snapshots_.end(), o.snapshots_.begin(), o.snapshots_.end());
    sorted_ = false;
  }

  std::uint64_t count() const noexcept {
    std::uint64_t n = 0;
    for (const auto& b : blocks_) n += b.trajectories;
    return n;
  }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  const std::vector<double>& sample_times() const noexcept { return sample_times_; }
  const std::vector<double>& coherence_times() const noexcept { return coherence_times_; }
  const std::vector<double>& density_times() const noexcept { return density_times_; }
  int sites() const noexcept { return L_; }

  TimeSums pooled(std::size_t k) const {
    TimeSums t;
    for (const auto& b : blocks_) {
      const TimeSums& s = b.moments.at(k);
      t.count += s.count;
      t.m1 += s.m1;
      t.m2 += s.m2;
      t.m4 += s.m4;
      t.m1sq += s.m1sq;
      t.m2sq += s.m2sq;
    }
    return t;
  }

  // Trajectory mean and standard error of <M> at sample k.
  Estimate m1(std::size_t k) const { return mean_and_error(k, &TimeSums::m1, &TimeSums::m1sq); }
  Estimate m2(std::size_t k) const { return mean_and_error(k, &TimeSums::m2, &TimeSums::m2sq); }
  double m4(std::size_t k) const {
    const TimeSums t = pooled(k);
    return t.m4 / t.count;
  }

  // Binder cumulant of the ensemble moments at sample k, jackknife error.
  Estimate binder_at(std::size_t k) const {
    std::vector<std::vector<double>> sums;
    for (const auto& b : blocks_) sums.push_back({b.moments.at(k).count, b.moments[k].m2, b.moments[k].m4});
    return jackknife(sums, [](const std::vector<double>& s) -> double {
      if (s[0] <= 0.0) return NAN;
      const auto u = binder(s[1] / s[0], s[2] / s[0]);
      return u ? *u : NAN;
    });
  }

  // Time average of U(t) over sample times in [t0, t1]; jackknife error over
  // blocks of the whole averaged quantity.
  Estimate binder_average(double t0, double t1) const {
    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k < sample_times_.size(); ++k)
      if (sample_times_[k] >= t0 - 1e-9 && sample_times_[k] <= t1 + 1e-9) ks.push_back(k);
    if (ks.empty()) throw ParameterError("no sample times inside the averaging window");
    std::vector<std::vector<double>> sums;
    for (const auto& b : blocks_) {
      std::vector<double> row;
      for (std::size_t k : ks) {
        row.push_back(b.moments[k].count);
        row.push_back(b.moments[k].m2);
        row.push_back(b.moments[k].m4);
      }
      sums.push_back(std::move(row));
    }
    return jackknife(sums, [n = ks.size()](const std::vector<double>& s) -> double {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (s[3 * j] <= 0.0) return NAN;
        const auto u = binder(s[3 * j + 1] / s[3 * j], s[3 * j + 2] / s[3 * j]);
        if (!u) return NAN;
        acc += *u;
      }
      return acc / static_cast<double>(n);
    });
  }

  // Ensemble-averaged pair matrices at coherence time k.
  std::vector<PairDensity> reduced_average(std::size_t k) const {
    std::vector<PairDensity> out(static_cast<std::size_t>(L_));
    double n = 0.0;
    for (const auto& b : blocks_) {
      n += static_cast<double>(b.trajectories);
      for (std::size_t l = 0; l < out.size(); ++l) out[l] += b.reduced.at(k)[l];
    }
    if (n > 0.0)
      for (auto& r : out) r *= 1.0 / n;
    return out;
  }

  // C at coherence time k with a delete-one-block jackknife error.
  Estimate coherence_at(std::size_t k) const {
    Estimate e;
    e.value = coherence(reduced_average(k));
    const std::size_t nb = blocks_.size();
    if (nb < 2) return e;
    std::vector<PairDensity> total(static_cast<std::size_t>(L_));
    double n = 0.0;
    for (const auto& b : blocks_) {
      n += static_cast<double>(b.trajectories);
      for (std::size_t l = 0; l < total.size(); ++l) total[l] += b.reduced[k][l];
    }
    std::vector<double> values;
    for (const auto& b : blocks_) {
      const double m = n - static_cast<double>(b.trajectories);
      if (m <= 0.0) continue;
      double c = 0.0;
      for (std::size_t l = 0; l < total.size(); ++l) {
        PairDensity r = total[l];
        for (std::size_t i = 0; i < r.m.size(); ++i) r.m[i] = (r.m[i] - b.reduced[k][l].m[i]) / m;
        c += pair_coherence(r);
      }
      values.push_back(c);
    }
    if (values.size() < 2) return e;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double nv = static_cast<double>(values.size());
    e.error = std::sqrt(var * (nv - 1.0) / nv);
    return e;
  }

  // Ensemble-averaged |psi><psi| at density time k, row-major dim x dim.
  std::vector<Amplitude> density_average(std::size_t k) const {
    std::vector<Amplitude> out(dim_ * dim_);
    double n = 0.0;
    for (const auto& b : blocks_) {
      n += static_cast<double>(b.trajectories);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.density.at(k)[i];
    }
    for (auto& x : out) x /= n;
    return out;
  }

  // Snapshots ordered by (trajectory, time).
  const std::vector<Snapshot>& snapshots() const {
    if (!sorted_) {
      std::sort(snapshots_.begin(), snapshots_.end(), [](const Snapshot& a, const Snapshot& b) {
        return a.trajectory != b.trajectory ? a.trajectory < b.trajectory : a.time < b.time;
      });
      sorted_ = true;
    }
    return snapshots_;
  }

 private:
  struct Block {
    std::uint64_t trajectories = 0;
    std::vector<TimeSums> moments;
    std::vector<std::vector<PairDensity>> reduced;
    std::vector<std::vector<Amplitude>> density;
  };

  Estimate mean_and_error(std::size_t k, double TimeSums::*sum, double TimeSums::*sumsq) const {
    const TimeSums t = pooled(k);
    Estimate e;
    if (t.count <= 0.0) return e;
    e.value = t.*sum / t.count;
    if (t.count > 1.0) {
      const double var = std::max(0.0, (t.*sumsq - t.count * e.value * e.value) / (t.count - 1.0));
      e.error = std::sqrt(var / t.count);
    }
    return e;
  }

  std::vector<double> sample_times_, coherence_times_, density_times_;
  int L_;
  std::size_t dim_;
  std::vector<Block> blocks_;
  mutable std::vector<Snapshot> snapshots_;
  mutable bool sorted_ = true;
};

// Runs `trajectories` independent trajectories through `run(index)`. Work is
// partitioned by jackknife block and each block processes its trajectory
// indices in ascending order, so the result is identical for every thread
// count.
template <class RunOne>
ObservableSeries run_ensemble_with(const RunOne& run, const TrajectoryConfig& cfg, int L, std::size_t dim,
                                   std::uint64_t trajectories, unsigned threads = 1, int blocks = 20,
                                   const std::function<void(std::uint64_t)>& progress = {}) {
  cfg.validate();
  if (blocks < 1) throw ParameterError("ensemble needs at least one jackknife block");
  const auto nb = static_cast<std::size_t>(blocks);
  std::vector<std::unique_ptr<ObservableSeries>> parts(nb);
  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> done{0};
  std::vector<std::exception_ptr> errors(nb);
  auto worker = [&] {
    for (std::size_t b = next++; b < nb; b = next++) {
      try {
        auto part = std::make_unique<ObservableSeries>(cfg, L, dim, blocks);
        for (std::uint64_t i = b; i < trajectories; i += nb) {
          part->add(run(i));
          const auto d = ++done;
          if (progress) progress(d);
        }
        parts[b] = std::move(part);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  ObservableSeries out(cfg, L, dim, blocks);
  for (auto& p : parts) out.merge(*p);
  return out;
}

inline ObservableSeries run_ensemble(const Propagator& prop, const TrajectoryConfig& cfg, std::uint64_t trajectories,
                                     unsigned threads = 1, int blocks = 20,
                                     const std::function<void(std::uint64_t)>& progress = {}) {
  return run_ensemble_with([&](std::uint64_t i) { return run_trajectory(prop, cfg, i); }, cfg, prop.params().L,
                           prop.basis().size(), trajectories, threads, blocks, progress);
}

// Picks the engine from cfg.engine; Auto selects the sector engine, which is
// exact for both built-in initial states.
inline ObservableSeries run_ensemble(const ModelParams& params, const TrajectoryConfig& cfg,
                                     std::uint64_t trajectories, unsigned threads = 1, int blocks = 20,
                                     const std::function<void(std::uint64_t)>& progress = {}) {
  params.validate();
  const bool need_basis = cfg.engine == Engine::Full || !cfg.density_times.empty();
  std::shared_ptr<const FockBasis> basis;
  if (need_basis) basis = std::make_shared<const FockBasis>(params.L, params.N);
  const std::size_t dim = basis ? basis->size() : 0;
  if (cfg.engine == Engine::Full) {
    const Propagator prop(basis, params);
    return run_ensemble(prop, cfg, trajectories, threads, blocks, progress);
  }
  return run_ensemble_with([&](std::uint64_t i) { return run_sector_trajectory(params, cfg, i, basis); }, cfg,
                           params.L, dim, trajectories, threads, blocks, progress);
}

}  // namespace aqf
