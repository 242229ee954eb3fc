#pragma once

// Coarse-grained mean-field theory: homogeneous Landau fixed point with the
// quantum shift, its linear stability, and the lattice field equations for
// (rho_x, m_x) under a Gaussian closure with variances gamma_X * rho_x.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/rng.hpp"

namespace aqf::hydro {

// Lattice substitute for d/dx: the plain difference O_{l+1} - O_{l-1}, or
// the centered derivative (O_{l+1} - O_{l-1}) / 2.
enum class Stencil { Difference, Centered };

inline std::string to_string(Stencil s) { return s == Stencil::Difference ? "difference" : "centered"; }

inline Stencil parse_stencil(const std::string& s) {
  if (s == "difference") return Stencil::Difference;
  if (s == "centered") return Stencil::Centered;
  throw ParameterError("unknown stencil '" + s + "' (difference|centered)");
}

struct ClosureParams {
  double gamma_rho = 0.2;
  double gamma_m = 0.6;
  double sigma2 = 0.125;
  double q = 0.5;
  double K = 4.0;
  double h = 0.0;
  double gamma_M = 1.0;
  double gamma_A = 0.1;
  Stencil stencil = Stencil::Difference;

  void validate() const {
    if (!(gamma_rho >= 0.0)) throw ParameterError("hydro.gamma_rho must be >= 0");
    if (!(gamma_m >= 0.0)) throw ParameterError("hydro.gamma_m must be >= 0");
    if (!(sigma2 > 0.0)) throw ParameterError("hydro.sigma2 must be positive");
    if (!std::isfinite(q)) throw ParameterError("hydro.q must be finite");
    if (!std::isfinite(K)) throw ParameterError("hydro.K must be finite");
    if (!(h >= 0.0)) throw ParameterError("hydro.h must be >= 0");
    if (!(gamma_M >= 0.0)) throw ParameterError("hydro.gamma_M must be >= 0");
    if (!(gamma_A > 0.0)) throw ParameterError("hydro.gamma_A must be positive");
  }
};

// Delta_h = 4 h^2 / (Gamma_A (Gamma_M + Gamma_A))
inline double delta_h(const ClosureParams& p) { return 4.0 * p.h * p.h / (p.gamma_A * (p.gamma_M + p.gamma_A)); }

// K_c at h = 0.
inline double critical_coupling_classical(const ClosureParams& p) { return 1.0 / (2.0 * p.sigma2); }

// K_c(h) = (1 + Delta_h) K_c(0)
inline double critical_coupling(const ClosureParams& p) { return (1.0 + delta_h(p)) * critical_coupling_classical(p); }

inline constexpr double kDegenerateTolerance = 1e-12;

// Small-m fixed point m^2 = (K/Kc - 1 - Delta_h) / (2 Kc^2 (q - 1/Kc)), Kc the
// h = 0 critical coupling. Empty on the disordered side (negative m^2).
inline std::optional<double> homogeneous_m2(const ClosureParams& p) {
  p.validate();
  const double kc = critical_coupling_classical(p);
  const double denom = p.q - 1.0 / kc;
  if (std::abs(denom) <= kDegenerateTolerance) throw ParameterError("degenerate closure: q equals 1/K_c");
  const double m2 = (p.K / kc - 1.0 - delta_h(p)) / (2.0 * kc * kc * denom);
  if (m2 < 0.0) return std::nullopt;
  return m2;
}

// Relaxation rate -4 Gamma_A (K/K_c(h) - 1) of homogeneous perturbations.
inline double homogeneous_stability(const ClosureParams& p) {
  return -4.0 * p.gamma_A * (p.K / critical_coupling(p) - 1.0);
}

// Closure variance s = gamma_m * rho that makes m = +-sqrt(m2) a zero of the
// homogeneous reaction term of the field equations:
//   1 - 2K (m^2 + s) + 2K^2 m^2 (m^2 + 3 s) = 0.
inline double closure_variance_for_fixed_point(double K, double m2) {
  const double denom = 2.0 * K - 6.0 * K * K * m2;
  if (std::abs(denom) <= kDegenerateTolerance) throw ParameterError("no closure variance matches this fixed point");
  return (1.0 - 2.0 * K * m2 + 2.0 * K * K * m2 * m2) / denom;
}

struct FieldState {
  std::vector<double> rho;
  std::vector<double> m;
  double t = 0.0;

  std::size_t sites() const noexcept { return rho.size(); }
};

struct FieldRates {
  std::vector<double> rho;
  std::vector<double> m;
};

inline double mass(const FieldState& s) {
  double sum = 0.0;
  for (double x : s.rho) sum += x;
  return sum;
}

inline double mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

inline double spatial_stddev(const std::vector<double>& v) {
  const double mu = mean(v);
  double var = 0.0;
  for (double x : v) var += (x - mu) * (x - mu);
  return v.empty() ? 0.0 : std::sqrt(var / static_cast<double>(v.size()));
}

namespace detail {

inline void check_shape(const FieldState& s) {
  if (s.rho.size() != s.m.size()) throw StructuralError("field state: rho and m differ in length");
  if (s.rho.size() < 3) throw ParameterError("field state needs at least 3 sites");
}

inline void rhs_into(const FieldState& s, const ClosureParams& p, FieldRates& out, std::vector<double>& work) {
  const std::size_t L = s.rho.size();
  out.rho.resize(L);
  out.m.resize(L);
  work.resize(2 * L);
  const auto& rho = s.rho;
  const auto& m = s.m;
  const double M = mean(m);
  const double d1 = p.stencil == Stencil::Difference ? 1.0 : 0.5;
  const double K = p.K;
  // Flux-like fields whose first differences enter the equations.
  double* f_rho = work.data();  // 2 rho m - m
  double* f_m = work.data() + L;  // rho^2 - rho + m^2 + (gamma_rho + gamma_m) rho
  for (std::size_t x = 0; x < L; ++x) {
    f_rho[x] = 2.0 * rho[x] * m[x] - m[x];
    f_m[x] = rho[x] * rho[x] - rho[x] + m[x] * m[x] + (p.gamma_rho + p.gamma_m) * rho[x];
  }
  for (std::size_t x = 0; x < L; ++x) {
    const std::size_t xp = x + 1 == L ? 0 : x + 1;
    const std::size_t xm = x == 0 ? L - 1 : x - 1;
    const double lap_rho = rho[xp] + rho[xm] - 2.0 * rho[x];
    const double lap_m = m[xp] + m[xm] - 2.0 * m[x];
    out.rho[x] = -p.gamma_M * (d1 * (f_rho[xp] - f_rho[xm]) - 0.5 * lap_rho);
    const double transport = d1 * (f_m[xp] - f_m[xm]) - 0.5 * lap_m;
    const double mx = m[x];
    const double reaction = mx - 2.0 * K * mx * mx * M + 2.0 * K * K * mx * mx * mx * M * M -
                            2.0 * K * p.gamma_m * rho[x] * M + 6.0 * K * K * p.gamma_m * rho[x] * mx * M * M;
    out.m[x] = -p.gamma_M * transport - 2.0 * p.gamma_A * reaction;
  }
}

}  // namespace detail

inline FieldRates field_rhs(const FieldState& s, const ClosureParams& p) {
  detail::check_shape(s);
  FieldRates out;
  std::vector<double> work;
  detail::rhs_into(s, p, out, work);
  return out;
}

inline constexpr double kBlowUpThreshold = 10.0;

// RK4 with fixed dt. Returns the state every `record_every` steps (and the
// initial state). Throws IntegrationError once any |m_x| exceeds 10.
inline std::vector<FieldState> integrate_fields(const FieldState& s0, const ClosureParams& p, double t_max,
                                                double dt = 0.01, long long record_every = 100) {
  p.validate();
  detail::check_shape(s0);
  if (!(dt > 0.0)) throw ParameterError("hydro.dt must be positive");
  if (!(t_max >= 0.0)) throw ParameterError("hydro.t_max must be >= 0");
  if (record_every < 1) throw ParameterError("hydro.record_every must be positive");
  const auto steps = static_cast<long long>(std::llround(t_max / dt));
  const std::size_t L = s0.sites();
  std::vector<FieldState> out{s0};
  FieldState s = s0, tmp = s0;
  FieldRates k1, k2, k3, k4;
  std::vector<double> work;
  for (long long n = 1; n <= steps; ++n) {
    detail::rhs_into(s, p, k1, work);
    for (std::size_t x = 0; x < L; ++x) {
      tmp.rho[x] = s.rho[x] + 0.5 * dt * k1.rho[x];
      tmp.m[x] = s.m[x] + 0.5 * dt * k1.m[x];
    }
    detail::rhs_into(tmp, p, k2, work);
    for (std::size_t x = 0; x < L; ++x) {
      tmp.rho[x] = s.rho[x] + 0.5 * dt * k2.rho[x];
      tmp.m[x] = s.m[x] + 0.5 * dt * k2.m[x];
    }
    detail::rhs_into(tmp, p, k3, work);
    for (std::size_t x = 0; x < L; ++x) {
      tmp.rho[x] = s.rho[x] + dt * k3.rho[x];
      tmp.m[x] = s.m[x] + dt * k3.m[x];
    }
    detail::rhs_into(tmp, p, k4, work);
    for (std::size_t x = 0; x < L; ++x) {
      s.rho[x] += dt / 6.0 * (k1.rho[x] + 2.0 * k2.rho[x] + 2.0 * k3.rho[x] + k4.rho[x]);
      s.m[x] += dt / 6.0 * (k1.m[x] + 2.0 * k2.m[x] + 2.0 * k3.m[x] + k4.m[x]);
    }
    s.t = s0.t + static_cast<double>(n) * dt;
    for (std::size_t x = 0; x < L; ++x)
      if (!(std::abs(s.m[x]) <= kBlowUpThreshold) || !std::isfinite(s.rho[x]))
        throw IntegrationError("field blow-up at site " + std::to_string(x), s.t);
    if (n % record_every == 0 || n == steps) out.push_back(s);
  }
  return out;
}

// rho = m = amplitude * exp(-((x - L/2) / width)^2 / 2): a cluster of up
// particles.
inline FieldState gaussian_cluster(int L, double amplitude = 0.5, double width = 0.5) {
  if (L < 3) throw ParameterError("hydro.L must be >= 3");
  FieldState s;
  s.rho.resize(static_cast<std::size_t>(L));
  for (int x = 0; x < L; ++x) {
    const double z = (x - 0.5 * L) / width;
    s.rho[static_cast<std::size_t>(x)] = amplitude * std::exp(-0.5 * z * z);
  }
  s.m = s.rho;
  return s;
}

inline FieldState homogeneous(int L, double rho, double m) {
  if (L < 3) throw ParameterError("hydro.L must be >= 3");
  FieldState s;
  s.rho.assign(static_cast<std::size_t>(L), rho);
  s.m.assign(static_cast<std::size_t>(L), m);
  return s;
}

// Homogeneous state plus independent uniform noise in [-amplitude, amplitude]
// on every site of both fields.
inline FieldState noisy_homogeneous(int L, double rho, double m, double amplitude, std::uint64_t seed) {
  FieldState s = homogeneous(L, rho, m);
  CounterRng rng(seed, 0, Stream::Noise);
  for (auto& x : s.rho) x += amplitude * (2.0 * rng.uniform() - 1.0);
  for (auto& x : s.m) x += amplitude * (2.0 * rng.uniform() - 1.0);
  return s;
}

// Position of the maximum of a periodic profile, refined by a parabola
// through the maximum and its neighbours. Result in [0, L).
inline double peak_position(const std::vector<double>& f) {
  const auto L = static_cast<std::ptrdiff_t>(f.size());
  const auto it = std::max_element(f.begin(), f.end());
  const std::ptrdiff_t i = it - f.begin();
  const double a = f[static_cast<std::size_t>((i - 1 + L) % L)];
  const double b = f[static_cast<std::size_t>(i)];
  const double c = f[static_cast<std::size_t>((i + 1) % L)];
  const double curv = a - 2.0 * b + c;
  double off = curv < 0.0 ? 0.5 * (a - c) / curv : 0.0;
  off = std::clamp(off, -0.5, 0.5);
  double pos = static_cast<double>(i) + off;
  if (pos < 0.0) pos += static_cast<double>(L);
  if (pos >= static_cast<double>(L)) pos -= static_cast<double>(L);
  return pos;
}

// Displacement from a to b on a ring of L sites, in (-L/2, L/2].
inline double ring_displacement(double a, double b, int L) {
  double d = std::fmod(b - a, static_cast<double>(L));
  if (d > 0.5 * L) d -= L;
  if (d <= -0.5 * L) d += L;
  return d;
}

struct PeakTrack {
  std::vector<double> times;
  std::vector<double> positions;    // wrapped, [0, L)
  std::vector<double> heights;
  std::vector<double> displacement;  // unwrapped, relative to the first entry
};

inline PeakTrack track_peak(const std::vector<FieldState>& series, double t0, double t1) {
  PeakTrack tr;
  for (const auto& s : series) {
    if (s.t < t0 - 1e-9 || s.t > t1 + 1e-9) continue;
    const double pos = peak_position(s.m);
    const double prev_disp = tr.displacement.empty() ? 0.0 : tr.displacement.back();
    const double step = tr.positions.empty() ? 0.0 : ring_displacement(tr.positions.back(), pos, static_cast<int>(s.sites()));
    tr.times.push_back(s.t);
    tr.positions.push_back(pos);
    tr.heights.push_back(*std::max_element(s.m.begin(), s.m.end()));
    tr.displacement.push_back(prev_disp + step);
  }
  return tr;
}

// True when consecutive displacements never change sign against the net
// drift and the net drift is at least `min_travel` sites.
inline bool advances_monotonically(const PeakTrack& tr, double min_travel = 1.0, double slack = 1e-9) {
  if (tr.displacement.size() < 2) return false;
  const double net = tr.displacement.back() - tr.displacement.front();
  if (std::abs(net) < min_travel) return false;
  const double dir = net > 0.0 ? 1.0 : -1.0;
  for (std::size_t k = 1; k < tr.displacement.size(); ++k)
    if (dir * (tr.displacement[k] - tr.displacement[k - 1]) < -slack) return false;
  return true;
}

// Dense grid: one row per recorded time, first column t, then one column per
// site.
inline void write_profile(std::ostream& os, const std::vector<FieldState>& series, bool magnetization) {
  os << "t";
  if (!series.empty())
    for (std::size_t x = 0; x < series.front().sites(); ++x) os << "\tx" << x;
  os << '\n';
  for (const auto& s : series) {
    os << s.t;
    for (double v : magnetization ? s.m : s.rho) os << '\t' << v;
    os << '\n';
  }
}

}  // namespace aqf::hydro
