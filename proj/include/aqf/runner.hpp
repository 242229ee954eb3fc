#pragma once

// Batch driver behind the command-line tool: executes one RunConfig and
// writes its ResultBundle (TSV tables + metadata.json) to the output
// directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "aqf/classical.hpp"
#include "aqf/clustering.hpp"
#include "aqf/config.hpp"
#include "aqf/ensemble.hpp"
#include "aqf/hydro.hpp"
#include "aqf/oracle.hpp"
#include "aqf/trajectory.hpp"

namespace aqf {

// ---- transition estimate ----

struct ScanPoint {
  double h = 0.0;
  double U = 0.0;
  double error = 0.0;
};

enum class Censoring { None, AboveRange, BelowRange };

struct TransitionEstimate {
  double h_star = NAN;
  double error = NAN;
  Censoring censoring = Censoring::None;
};

inline std::string to_string(Censoring c) {
  switch (c) {
    case Censoring::None: return "crossing";
    case Censoring::AboveRange: return "censored_above";
    case Censoring::BelowRange: return "censored_below";
  }
  return "?";
}

// First downward crossing of 2/3 - epsilon along increasing h, by linear
// interpolation. The uncertainty adds half the bracketing spacing to the
// Ubar error carried through the local slope.
inline TransitionEstimate estimate_transition(const std::vector<ScanPoint>& scan, double epsilon = 0.02) {
  if (scan.size() < 2) throw ParameterError("estimate_transition needs at least two scan points");
  for (std::size_t i = 1; i < scan.size(); ++i)
    if (!(scan[i].h > scan[i - 1].h)) throw ParameterError("scan fields must be strictly increasing");
  const double thr = 2.0 / 3.0 - epsilon;
  TransitionEstimate out;
  if (scan.front().U < thr) {
    out.censoring = Censoring::BelowRange;
    out.h_star = scan.front().h;
    return out;
  }
  for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
    const ScanPoint& a = scan[i];
    const ScanPoint& b = scan[i + 1];
    if (a.U >= thr && b.U < thr) {
      const double span = b.h - a.h;
      const double dU = a.U - b.U;
      out.h_star = a.h + span * (a.U - thr) / dU;
      const double eu = std::max(std::isfinite(a.error) ? a.error : 0.0, std::isfinite(b.error) ? b.error : 0.0);
      out.error = 0.5 * span + span / dU * eu;
      return out;
    }
  }
  out.censoring = Censoring::AboveRange;
  out.h_star = scan.back().h;
  return out;
}

// ---- result bundle ----

class ResultWriter {
 public:
  ResultWriter(std::filesystem::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    std::filesystem::create_directories(dir_);
  }

  // Opens a table whose first line carries the config hash, then the header.
  std::ofstream table(const std::string& name, const std::vector<std::string>& columns) {
    std::ofstream os(dir_ / name);
    if (!os) throw ResourceError("cannot write " + (dir_ / name).string());
    os << "# config-hash: " << hash_ << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "\t" : "") << columns[i];
    os << '\n' << std::setprecision(17);
    files_.push_back(name);
    return os;
  }

  // Table with the header written by the caller.
  std::ofstream raw_table(const std::string& name) {
    std::ofstream os(dir_ / name);
    if (!os) throw ResourceError("cannot write " + (dir_ / name).string());
    os << "# config-hash: " << hash_ << '\n' << std::setprecision(17);
    files_.push_back(name);
    return os;
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::string> files_;
};

struct RunSummary {
  std::filesystem::path output_dir;
  std::vector<std::string> files;
  nlohmann::json values;  // headline numbers, also in metadata.json
};

namespace detail {

inline void write_summary(ResultWriter& w, const nlohmann::json& values) {
  auto os = w.table("summary.tsv", {"key", "value"});
  for (const auto& [k, v] : values.items()) {
    if (v.is_number()) os << k << '\t' << v.get<double>() << '\n';
    else if (v.is_string()) os << k << '\t' << v.get<std::string>() << '\n';
    else os << k << '\t' << v.dump() << '\n';
  }
}

inline std::uint64_t clamp_count(const ModelParams& p) {
  if (p.kernel != Kernel::Linear) return 0;
  const FockBasis basis(p.L, p.N);
  return count_linear_clamps(basis, p);
}

inline void write_series(ResultWriter& w, const ObservableSeries& s) {
  auto os = w.table("series.tsv", {"t", "M", "M_err", "M2", "M2_err", "M4", "U", "U_err"});
  for (std::size_t k = 0; k < s.sample_times().size(); ++k) {
    const Estimate m1 = s.m1(k), m2 = s.m2(k), u = s.binder_at(k);
    os << s.sample_times()[k] << '\t' << m1.value << '\t' << m1.error << '\t' << m2.value << '\t' << m2.error << '\t'
       << s.m4(k) << '\t' << u.value << '\t' << u.error << '\n';
  }
}

inline void run_trajectory_mode(const RunConfig& c, ResultWriter& w, nlohmann::json& summary) {
  const ObservableSeries s = run_ensemble(c.model, c.trajectory, c.trajectories, c.effective_threads(), c.blocks);
  write_series(w, s);
  const Estimate ubar = s.binder_average(c.observables.window_start, c.observables.window_stop);
  summary["U_bar"] = ubar.value;
  summary["U_bar_err"] = ubar.error;
  summary["trajectories"] = s.count();
  if (!s.coherence_times().empty()) {
    auto os = w.table("coherence.tsv", {"t", "C", "C_err"});
    for (std::size_t k = 0; k < s.coherence_times().size(); ++k) {
      const Estimate e = s.coherence_at(k);
      os << s.coherence_times()[k] << '\t' << e.value << '\t' << e.error << '\n';
    }
  }
  if (c.clustering.enabled) {
    const auto& snaps = s.snapshots();
    {
      auto os = w.table("snapshots.tsv", {"trajectory", "t", "configuration"});
      for (const auto& sn : snaps) os << sn.trajectory << '\t' << sn.time << '\t' << sn.configuration << '\n';
    }
    std::vector<ClusterStats> stats;
    stats.reserve(snaps.size());
    for (const auto& sn : snaps) stats.push_back(cluster_gamma(sn.configuration, c.model.L, c.clustering.species, c.clustering.d_c));
    const Histogram h = gamma_histogram(stats, c.clustering.bins, gamma_max(c.model.L), c.clustering.pool);
    auto os = w.raw_table("histogram.tsv");
    write_histogram(os, h);
    summary["gamma_samples"] = h.samples;
  }
}

inline void run_oracle_mode(const RunConfig& c, ResultWriter& w, nlohmann::json& summary) {
  auto basis = std::make_shared<const FockBasis>(c.model.L, c.model.N);
  oracle::require_dimension(basis->size(), oracle::kMaxDimension, "oracle-compare");
  const ObservableSeries s = run_ensemble(c.model, c.trajectory, c.trajectories, c.effective_threads(), c.blocks);
  const oracle::Lindbladian lv(basis, c.model);
  const StateVector psi0 = initial_state(basis, c.trajectory.initial_state);
  std::vector<double> times = s.sample_times();
  const auto rhos = oracle::integrate(lv, oracle::pure_state(psi0), times, c.oracle.dt);
  double max_z = 0.0;
  {
    auto os = w.table("oracle_compare.tsv", {"t", "M2_traj", "M2_err", "M2_oracle", "z"});
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Estimate m2 = s.m2(k);
      const double ref = oracle::magnetization_moment(rhos[k], 2);
      const double diff = m2.value - ref;
      const double z = m2.error > 0.0 ? diff / m2.error : (std::abs(diff) < 1e-12 ? 0.0 : INFINITY);
      max_z = std::max(max_z, std::abs(z));
      os << times[k] << '\t' << m2.value << '\t' << m2.error << '\t' << ref << '\t' << z << '\n';
    }
  }
  const auto n = static_cast<Eigen::Index>(basis->size());
  const auto avg = s.density_average(0);
  // density_average is row-major; Eigen maps column-major, hence the transpose.
  const oracle::Matrix traj = Eigen::Map<const oracle::Matrix>(avg.data(), n, n).transpose();
  const auto ref = oracle::integrate(lv, oracle::pure_state(psi0), {c.oracle.trace_time}, c.oracle.dt);
  const double td = oracle::trace_distance(traj, ref.front().entries);
  summary["max_abs_z"] = max_z;
  summary["trace_distance"] = td;
  summary["trace_distance_bound"] = 5.0 / std::sqrt(static_cast<double>(s.count()));
  summary["trace_time"] = c.oracle.trace_time;
}

inline void run_phase_scan_mode(const RunConfig& c, ResultWriter& w, nlohmann::json& summary) {
  TrajectoryConfig t = c.trajectory;
  t.sample_times = TrajectoryConfig::grid(c.observables.window_start, c.observables.window_stop, c.observables.sample_step);
  t.snapshot_times.clear();
  t.coherence_times.clear();
  t.density_times.clear();
  auto scan_os = w.table("phase_scan.tsv", {"K", "L", "h", "U_bar", "U_err"});
  auto tr_os = w.table("transitions.tsv", {"K", "L", "h_star", "h_star_err", "status"});
  nlohmann::json transitions = nlohmann::json::array();
  for (double K : c.phase_scan.K)
    for (int L : c.phase_scan.L) {
      std::vector<ScanPoint> pts;
      for (double h : c.phase_scan.h) {
        ModelParams p = c.model;
        p.L = L;
        p.N = L / 2;
        p.r = std::min(c.model.r, std::max(1, L / 2));
        p.K = K;
        p.h = h;
        const ObservableSeries s = run_ensemble(p, t, c.trajectories, c.effective_threads(), c.blocks);
        const Estimate u = s.binder_average(c.observables.window_start, c.observables.window_stop);
        pts.push_back({h, u.value, u.error});
        scan_os << K << '\t' << L << '\t' << h << '\t' << u.value << '\t' << u.error << '\n';
        std::cerr << "phase-scan K=" << K << " L=" << L << " h=" << h << " U=" << u.value << "\n";
      }
      const TransitionEstimate e = estimate_transition(pts, c.phase_scan.epsilon);
      tr_os << K << '\t' << L << '\t' << e.h_star << '\t' << e.error << '\t' << to_string(e.censoring) << '\n';
      transitions.push_back({{"K", K}, {"L", L}, {"h_star", e.h_star}, {"status", to_string(e.censoring)}});
    }
  summary["transitions"] = transitions;
}

inline hydro::FieldState hydro_initial(const HydroConfig& h) {
  if (h.initial == "gaussian") return hydro::gaussian_cluster(h.L);
  if (h.initial == "homogeneous") return hydro::homogeneous(h.L, h.rho0, h.m0);
  return hydro::noisy_homogeneous(h.L, h.rho0, h.m0, h.noise, h.noise_seed);
}

inline void run_hydro_mode(const RunConfig& c, ResultWriter& w, nlohmann::json& summary) {
  const HydroConfig& h = c.hydro;
  const hydro::FieldState s0 = hydro_initial(h);
  const auto r0 = hydro::field_rhs(s0, h.closure);
  double max_rhs = 0.0;
  for (std::size_t x = 0; x < s0.sites(); ++x) max_rhs = std::max({max_rhs, std::abs(r0.rho[x]), std::abs(r0.m[x])});
  const auto series = hydro::integrate_fields(s0, h.closure, h.t_max, h.dt, h.record_every);
  {
    auto os = w.raw_table("m_profile.tsv");
    hydro::write_profile(os, series, true);
  }
  {
    auto os = w.raw_table("rho_profile.tsv");
    hydro::write_profile(os, series, false);
  }
  const auto track = hydro::track_peak(series, h.track_start, h.track_stop);
  {
    auto os = w.table("peak.tsv", {"t", "position", "displacement", "height"});
    for (std::size_t k = 0; k < track.times.size(); ++k)
      os << track.times[k] << '\t' << track.positions[k] << '\t' << track.displacement[k] << '\t' << track.heights[k]
         << '\n';
  }
  {
    auto os = w.table("moments.tsv", {"t", "mass", "m_mean", "m_std"});
    for (const auto& s : series)
      os << s.t << '\t' << hydro::mass(s) << '\t' << hydro::mean(s.m) << '\t' << hydro::spatial_stddev(s.m) << '\n';
  }
  summary["max_abs_rhs_initial"] = max_rhs;
  summary["critical_coupling"] = hydro::critical_coupling(h.closure);
  summary["homogeneous_stability"] = hydro::homogeneous_stability(h.closure);
  try {
    const auto m2 = hydro::homogeneous_m2(h.closure);
    summary["homogeneous_m2"] = m2 ? *m2 : NAN;
  } catch (const ParameterError&) {
    summary["homogeneous_m2"] = "degenerate";
  }
  summary["peak_advances_monotonically"] = hydro::advances_monotonically(track) ? 1 : 0;
  summary["m_std_initial"] = hydro::spatial_stddev(series.front().m);
  summary["m_std_final"] = hydro::spatial_stddev(series.back().m);
}

inline void run_classical_mode(const RunConfig& c, ResultWriter& w, nlohmann::json& summary) {
  const auto& cp = c.classical;
  const auto run = classical::run_classical(cp.params, cp.histories, cp.sweeps, cp.record_every, cp.seed,
                                            c.effective_threads());
  {
    auto os = w.raw_table("classical_series.tsv");
    classical::write_series(os, run);
  }
  summary["M2_long_time"] = classical::window_average(run, cp.window_start, cp.sweeps);
  summary["histories"] = run.histories;
}

inline void run_kolmogorov_mode(const RunConfig& c, ResultWriter& w, nlohmann::json& summary) {
  const auto& k = c.kolmogorov;
  const auto spec = classical::canonical_cycle(k.K, k.epsilon);
  const auto r = classical::kolmogorov_rates(spec, k.gamma);
  auto os = w.table("kolmogorov.tsv", {"gamma", "K", "epsilon", "forward", "backward", "ratio", "forward_closed",
                                       "backward_closed"});
  os << k.gamma << '\t' << k.K << '\t' << k.epsilon << '\t' << r.forward << '\t' << r.backward << '\t' << r.ratio << '\t'
     << classical::closed_form_forward(k.gamma, k.K, k.epsilon) << '\t'
     << classical::closed_form_backward(k.gamma, k.K, k.epsilon) << '\n';
  summary["ratio"] = r.ratio;
}

}  // namespace detail

inline std::filesystem::path resolve_output_dir(const RunConfig& c) {
  if (const char* env = std::getenv("AQF_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

// Runs a validated configuration. Numeric tables depend only on the config;
// wall time and thread count go to metadata.json only.
inline RunSummary run(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  ResultWriter w(resolve_output_dir(c), c.hash_hex());
  nlohmann::json summary = nlohmann::json::object();
  switch (c.mode) {
    case Mode::Trajectory: detail::run_trajectory_mode(c, w, summary); break;
    case Mode::OracleCompare: detail::run_oracle_mode(c, w, summary); break;
    case Mode::PhaseScan: detail::run_phase_scan_mode(c, w, summary); break;
    case Mode::Hydro: detail::run_hydro_mode(c, w, summary); break;
    case Mode::Classical: detail::run_classical_mode(c, w, summary); break;
    case Mode::Kolmogorov: detail::run_kolmogorov_mode(c, w, summary); break;
  }
  detail::write_summary(w, summary);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json meta;
  meta["config_hash"] = c.hash_hex();
  meta["version"] = kVersion;
  meta["mode"] = to_string(c.mode);
  meta["config"] = c.echo;
  meta["seeds"] = {{"trajectory", c.trajectory.seed}, {"classical", c.classical.seed}, {"hydro_noise", c.hydro.noise_seed}};
  meta["threads"] = c.effective_threads();
  meta["wall_time_seconds"] = wall;
  const bool quantum = c.mode == Mode::Trajectory || c.mode == Mode::OracleCompare || c.mode == Mode::PhaseScan;
  if (quantum && c.model.kernel == Kernel::Linear) meta["linear_kernel_clamps"] = detail::clamp_count(c.model);
  meta["summary"] = summary;
  meta["files"] = w.files();
  std::ofstream(w.dir() / "metadata.json") << meta.dump(2) << '\n';
  return {w.dir(), w.files(), summary};
}

}  // namespace aqf
