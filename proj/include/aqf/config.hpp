#pragma once

// Run configuration: INI text with one section per module. Every key has a
// documented default; unknown keys and malformed values are rejected with a
// ConfigError naming the key.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aqf/classical.hpp"
#include "aqf/clustering.hpp"
#include "aqf/error.hpp"
#include "aqf/hydro.hpp"
#include "aqf/model.hpp"
#include "aqf/trajectory.hpp"

namespace aqf {

inline constexpr const char* kVersion = "1.0.0";

enum class Mode { Trajectory, OracleCompare, PhaseScan, Hydro, Classical, Kolmogorov };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Trajectory: return "trajectory";
    case Mode::OracleCompare: return "oracle-compare";
    case Mode::PhaseScan: return "phase-scan";
    case Mode::Hydro: return "hydro";
    case Mode::Classical: return "classical";
    case Mode::Kolmogorov: return "kolmogorov";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Trajectory, Mode::OracleCompare, Mode::PhaseScan, Mode::Hydro, Mode::Classical,
                 Mode::Kolmogorov})
    if (to_string(m) == s) return m;
  throw ParameterError("unknown mode '" + s +
                       "' (trajectory|oracle-compare|phase-scan|hydro|classical|kolmogorov)");
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct KeySpec {
  const char* key;  // section.name
  const char* default_value;
  const char* doc;
};

// The full schema. Order here is the order of `print-defaults`.
inline const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"run.mode", "trajectory", "trajectory | oracle-compare | phase-scan | hydro | classical | kolmogorov"},
      {"run.output_dir", "results", "output directory (overridden by $AQF_OUTPUT_DIR)"},
      {"run.threads", "0", "worker threads; 0 = available hardware parallelism"},
      {"run.trajectories", "100", "ensemble size N_r"},
      {"run.blocks", "20", "jackknife blocks (trajectory index mod blocks)"},

      {"model.L", "8", "lattice sites"},
      {"model.N", "4", "particles"},
      {"model.h", "0.2", "spin-flip field h (units of Gamma)"},
      {"model.gamma_M", "1", "motion rate Gamma_M"},
      {"model.gamma_A", "1", "alignment rate Gamma_A"},
      {"model.K", "3.8", "alignment coupling"},
      {"model.r", "4", "interaction radius, 1 <= r <= L/2"},
      {"model.kernel", "exponential", "exponential | linear | delta"},
      {"model.M0", "2", "target neighbourhood magnetization of the delta kernel"},

      {"trajectory.dt", "0.01", "time step"},
      {"trajectory.t_max", "70", "final time"},
      {"trajectory.seed", "1", "master seed"},
      {"trajectory.initial_state", "plus_product", "plus_product | pair_product"},
      {"trajectory.max_step_probability", "0.1", "step is halved while total jump probability exceeds this"},
      {"trajectory.engine", "auto", "auto | full | sector"},

      {"observables.sample_step", "1", "spacing of M-moment samples"},
      {"observables.window_start", "40", "start of the U averaging window"},
      {"observables.window_stop", "70", "end of the U averaging window"},
      {"observables.coherence_times", "", "times for C(t); list or start:stop:step"},

      {"clustering.enabled", "false", "record projective snapshots and the gamma histogram"},
      {"clustering.snapshot_times", "40:70:1", "snapshot times; list or start:stop:step"},
      {"clustering.species", "down", "up | down"},
      {"clustering.d_c", "4", "density cutoff distance"},
      {"clustering.bins", "40", "histogram bins over [0, L^2/4]"},
      {"clustering.pool", "all", "all | occupied sites contribute gamma values"},

      {"oracle.dt", "0.005", "RK4 step of the dense integrator"},
      {"oracle.trace_time", "10", "time of the trace-distance comparison"},

      {"phase_scan.K", "3.8", "couplings; list or start:stop:step"},
      {"phase_scan.L", "8,10", "lattice sizes (N = L/2, r = min(model.r, L/2))"},
      {"phase_scan.h", "0.1:3.0:0.1", "fields; list or start:stop:step"},
      {"phase_scan.epsilon", "0.02", "transition threshold is 2/3 - epsilon"},

      {"hydro.L", "20", "field lattice sites"},
      {"hydro.initial", "gaussian", "gaussian | homogeneous | noisy"},
      {"hydro.rho0", "0.25", "homogeneous density"},
      {"hydro.m0", "0.25", "homogeneous magnetization"},
      {"hydro.noise", "0.0005", "uniform noise amplitude (initial = noisy)"},
      {"hydro.noise_seed", "1", "seed of the initial noise"},
      {"hydro.gamma_rho", "0.2", "density fluctuation coefficient"},
      {"hydro.gamma_m", "0.6", "magnetization fluctuation coefficient"},
      {"hydro.sigma2", "0.125", "closure variance sigma^2"},
      {"hydro.q", "0.5", "closure coefficient q"},
      {"hydro.K", "4", "alignment coupling"},
      {"hydro.h", "0", "spin-flip field"},
      {"hydro.gamma_M", "1", "motion rate"},
      {"hydro.gamma_A", "0.1", "alignment rate"},
      {"hydro.stencil", "difference", "difference | centered"},
      {"hydro.dt", "0.01", "RK4 step"},
      {"hydro.t_max", "200", "final time"},
      {"hydro.record_every", "100", "record a profile every n steps"},
      {"hydro.track_start", "10", "start of the peak-tracking window"},
      {"hydro.track_stop", "100", "end of the peak-tracking window"},

      {"classical.L", "32", "ring sites"},
      {"classical.K", "3.5", "alignment coupling"},
      {"classical.r", "4", "interaction radius"},
      {"classical.scale", "0.1", "global factor on per-sweep probabilities"},
      {"classical.histories", "200", "independent histories"},
      {"classical.sweeps", "40000", "sweeps per history"},
      {"classical.record_every", "200", "record <M^2> every n sweeps"},
      {"classical.seed", "1", "master seed"},
      {"classical.window_start", "20000", "first sweep of the long-time average"},

      {"kolmogorov.gamma", "1", "bare rate Gamma"},
      {"kolmogorov.K", "1", "alignment coupling"},
      {"kolmogorov.epsilon", "0", "motion bias"},
  };
  return schema;
}

// "a,b,c" or "start:stop:step" (inclusive grid); empty means an empty list.
inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t') s += c;
  if (s.empty()) return out;
  const auto num = [](const std::string& t) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
      throw ParameterError("'" + t + "' is not a finite number");
    return v;
  };
  if (s.find(':') != std::string::npos) {
    const auto a = s.find(':');
    const auto b = s.find(':', a + 1);
    if (b == std::string::npos || s.find(':', b + 1) != std::string::npos)
      throw ParameterError("range must read start:stop:step");
    const double start = num(s.substr(0, a)), stop = num(s.substr(a + 1, b - a - 1)), step = num(s.substr(b + 1));
    if (!(step > 0.0) || stop < start) throw ParameterError("range needs step > 0 and stop >= start");
    const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
    // Round each grid point to 12 significant digits so 0.1:3.0:0.1 yields 0.3, not 0.30000000000000004.
    for (long long k = 0; k <= n; ++k) {
      const double v = start + static_cast<double>(k) * step;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out.push_back(std::strtod(buf, nullptr));
    }
    return out;
  }
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    out.push_back(num(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

struct ObservablesConfig {
  double sample_step = 1.0;
  double window_start = 40.0;
  double window_stop = 70.0;
  std::vector<double> coherence_times;
};

struct ClusteringConfig {
  bool enabled = false;
  std::vector<double> snapshot_times;
  Spin species = Spin::Down;
  int d_c = 4;
  int bins = 40;
  SitePool pool = SitePool::All;
};

struct OracleConfig {
  double dt = 0.005;
  double trace_time = 10.0;
};

struct PhaseScanConfig {
  std::vector<double> K;
  std::vector<int> L;
  std::vector<double> h;
  double epsilon = 0.02;
};

struct HydroConfig {
  hydro::ClosureParams closure;
  int L = 20;
  std::string initial = "gaussian";
  double rho0 = 0.25;
  double m0 = 0.25;
  double noise = 5e-4;
  std::uint64_t noise_seed = 1;
  double dt = 0.01;
  double t_max = 200.0;
  long long record_every = 100;
  double track_start = 10.0;
  double track_stop = 100.0;
};

struct ClassicalRunConfig {
  classical::ClassicalParams params;
  std::uint64_t histories = 200;
  long long sweeps = 40000;
  long long record_every = 200;
  std::uint64_t seed = 1;
  long long window_start = 20000;
};

struct KolmogorovConfig {
  double gamma = 1.0;
  double K = 1.0;
  double epsilon = 0.0;
};

struct RunConfig {
  Mode mode = Mode::Trajectory;
  std::string output_dir = "results";
  unsigned threads = 0;
  std::uint64_t trajectories = 100;
  int blocks = 20;
  ModelParams model;
  TrajectoryConfig trajectory;
  ObservablesConfig observables;
  ClusteringConfig clustering;
  OracleConfig oracle;
  PhaseScanConfig phase_scan;
  HydroConfig hydro;
  ClassicalRunConfig classical;
  KolmogorovConfig kolmogorov;

  std::map<std::string, std::string> echo;  // canonical key = value, every schema key

  unsigned effective_threads() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }

  std::string canonical_text() const {
    std::string s;
    for (const auto& [k, v] : echo) s += k + " = " + v + "\n";
    return s;
  }
  std::uint64_t hash() const { return fnv1a(canonical_text()); }
  std::string hash_hex() const { return hex64(hash()); }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const boost::property_tree::ptree& tree) {
    for (const auto& spec : config_schema()) defaults_[spec.key] = spec.default_value;
    for (const auto& [section, body] : tree) {
      if (!body.data().empty() && body.empty()) throw ConfigError(section, "key outside of any section");
      for (const auto& [name, value] : body) {
        const std::string key = section + "." + name;
        if (!defaults_.count(key)) throw ConfigError(key, "unknown key");
        values_[key] = trim(value.data());
      }
    }
  }

  std::string text(const std::string& key) {
    const auto it = values_.find(key);
    const std::string v = it != values_.end() ? it->second : defaults_.at(key);
    echo[key] = v;
    return v;
  }

  double number(const std::string& key) {
    const std::string s = text(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(key, "expected a finite number, got '" + s + "'");
    echo[key] = format_double(v);
    return v;
  }

  long long integer(const std::string& key, long long lo, long long hi) {
    const std::string s = text(key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError(key, "expected an integer, got '" + s + "'");
    if (v < lo || v > hi)
      throw ConfigError(key, "value " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    echo[key] = std::to_string(v);
    return v;
  }

  bool boolean(const std::string& key) {
    const std::string s = text(key);
    if (s == "true" || s == "1" || s == "yes") return echo[key] = "true", true;
    if (s == "false" || s == "0" || s == "no") return echo[key] = "false", false;
    throw ConfigError(key, "expected true or false, got '" + s + "'");
  }

  std::vector<double> list(const std::string& key) {
    try {
      auto v = parse_number_list(text(key));
      echo[key] = format_list(v);
      return v;
    } catch (const ParameterError& e) {
      throw ConfigError(key, e.what());
    }
  }

  template <class F>
  auto enumerated(const std::string& key, F&& parse) {
    try {
      return parse(text(key));
    } catch (const ParameterError& e) {
      throw ConfigError(key, e.what());
    }
  }

  std::map<std::string, std::string> echo;

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> defaults_;
  std::map<std::string, std::string> values_;
};

// Maps a ParameterError raised by a block's validate() to the key it names
// ("model.L must ..."), falling back to the block name.
inline ConfigError as_config_error(const ParameterError& e, const std::string& block) {
  const std::string msg = e.what();
  const auto space = msg.find(' ');
  const std::string head = msg.substr(0, space);
  if (head.find('.') != std::string::npos && head.rfind(block + ".", 0) == 0)
    return ConfigError(head, space == std::string::npos ? msg : msg.substr(space + 1));
  return ConfigError(block, msg);
}

template <class F>
void validate_block(const std::string& block, F&& f) {
  try {
    f();
  } catch (const ParameterError& e) {
    throw as_config_error(e, block);
  }
}

}  // namespace detail

// Parses and fully validates. Throws ConfigError.
inline RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  detail::ConfigReader r(tree);
  RunConfig c;

  c.mode = r.enumerated("run.mode", parse_mode);
  c.output_dir = r.text("run.output_dir");
  c.threads = static_cast<unsigned>(r.integer("run.threads", 0, 4096));
  c.trajectories = static_cast<std::uint64_t>(r.integer("run.trajectories", 1, 1LL << 40));
  c.blocks = static_cast<int>(r.integer("run.blocks", 2, 1000));

  auto& m = c.model;
  m.L = static_cast<int>(r.integer("model.L", 1, kMaxSites));
  m.N = static_cast<int>(r.integer("model.N", 0, 2 * kMaxSites));
  m.h = r.number("model.h");
  m.gamma_M = r.number("model.gamma_M");
  m.gamma_A = r.number("model.gamma_A");
  m.K = r.number("model.K");
  m.r = static_cast<int>(r.integer("model.r", 1, kMaxSites));
  m.kernel = r.enumerated("model.kernel", parse_kernel);
  m.M0 = static_cast<int>(r.integer("model.M0", -2 * kMaxSites, 2 * kMaxSites));

  auto& t = c.trajectory;
  t.dt = r.number("trajectory.dt");
  t.t_max = r.number("trajectory.t_max");
  t.seed = static_cast<std::uint64_t>(r.integer("trajectory.seed", 0, std::numeric_limits<long long>::max()));
  t.initial_state = r.enumerated("trajectory.initial_state", parse_initial_state);
  t.max_step_probability = r.number("trajectory.max_step_probability");
  t.engine = r.enumerated("trajectory.engine", parse_engine);

  auto& o = c.observables;
  o.sample_step = r.number("observables.sample_step");
  o.window_start = r.number("observables.window_start");
  o.window_stop = r.number("observables.window_stop");
  o.coherence_times = r.list("observables.coherence_times");

  auto& cl = c.clustering;
  cl.enabled = r.boolean("clustering.enabled");
  cl.snapshot_times = r.list("clustering.snapshot_times");
  cl.species = r.enumerated("clustering.species", [](const std::string& s) {
    if (s == "up") return Spin::Up;
    if (s == "down") return Spin::Down;
    throw ParameterError("expected up or down, got '" + s + "'");
  });
  cl.d_c = static_cast<int>(r.integer("clustering.d_c", 1, kMaxSites));
  cl.bins = static_cast<int>(r.integer("clustering.bins", 1, 100000));
  cl.pool = r.enumerated("clustering.pool", [](const std::string& s) {
    if (s == "all") return SitePool::All;
    if (s == "occupied") return SitePool::Occupied;
    throw ParameterError("expected all or occupied, got '" + s + "'");
  });

  c.oracle.dt = r.number("oracle.dt");
  c.oracle.trace_time = r.number("oracle.trace_time");

  auto& ps = c.phase_scan;
  ps.K = r.list("phase_scan.K");
  for (double L : r.list("phase_scan.L")) {
    if (L != std::floor(L) || L < 2 || L > kMaxSites) throw ConfigError("phase_scan.L", "sizes must be integers in [2, 31]");
    ps.L.push_back(static_cast<int>(L));
  }
  ps.h = r.list("phase_scan.h");
  ps.epsilon = r.number("phase_scan.epsilon");

  auto& hy = c.hydro;
  hy.L = static_cast<int>(r.integer("hydro.L", 3, 1000000));
  hy.initial = r.enumerated("hydro.initial", [](const std::string& s) {
    if (s == "gaussian" || s == "homogeneous" || s == "noisy") return s;
    throw ParameterError("expected gaussian, homogeneous or noisy, got '" + s + "'");
  });
  hy.rho0 = r.number("hydro.rho0");
  hy.m0 = r.number("hydro.m0");
  hy.noise = r.number("hydro.noise");
  hy.noise_seed = static_cast<std::uint64_t>(r.integer("hydro.noise_seed", 0, std::numeric_limits<long long>::max()));
  hy.closure.gamma_rho = r.number("hydro.gamma_rho");
  hy.closure.gamma_m = r.number("hydro.gamma_m");
  hy.closure.sigma2 = r.number("hydro.sigma2");
  hy.closure.q = r.number("hydro.q");
  hy.closure.K = r.number("hydro.K");
  hy.closure.h = r.number("hydro.h");
  hy.closure.gamma_M = r.number("hydro.gamma_M");
  hy.closure.gamma_A = r.number("hydro.gamma_A");
  hy.closure.stencil = r.enumerated("hydro.stencil", hydro::parse_stencil);
  hy.dt = r.number("hydro.dt");
  hy.t_max = r.number("hydro.t_max");
  hy.record_every = r.integer("hydro.record_every", 1, std::numeric_limits<long long>::max());
  hy.track_start = r.number("hydro.track_start");
  hy.track_stop = r.number("hydro.track_stop");

  auto& cp = c.classical;
  cp.params.L = static_cast<int>(r.integer("classical.L", 2, classical::kMaxChain));
  cp.params.K = r.number("classical.K");
  cp.params.r = static_cast<int>(r.integer("classical.r", 1, classical::kMaxChain));
  cp.params.scale = r.number("classical.scale");
  cp.histories = static_cast<std::uint64_t>(r.integer("classical.histories", 1, 1LL << 32));
  cp.sweeps = r.integer("classical.sweeps", 0, 1LL << 40);
  cp.record_every = r.integer("classical.record_every", 1, 1LL << 40);
  cp.seed = static_cast<std::uint64_t>(r.integer("classical.seed", 0, std::numeric_limits<long long>::max()));
  cp.window_start = r.integer("classical.window_start", 0, 1LL << 40);

  c.kolmogorov.gamma = r.number("kolmogorov.gamma");
  c.kolmogorov.K = r.number("kolmogorov.K");
  c.kolmogorov.epsilon = r.number("kolmogorov.epsilon");

  c.echo = std::move(r.echo);

  // Derived observation grids.
  t.sample_times = TrajectoryConfig::grid(0.0, t.t_max, o.sample_step);
  t.coherence_times = o.coherence_times;
  if (cl.enabled) t.snapshot_times = cl.snapshot_times;
  if (c.mode == Mode::OracleCompare) t.density_times = {c.oracle.trace_time};

  // Validate the blocks the selected mode uses.
  const bool quantum = c.mode == Mode::Trajectory || c.mode == Mode::OracleCompare || c.mode == Mode::PhaseScan;
  if (quantum) {
    detail::validate_block("model", [&] { m.validate(); });
    detail::validate_block("trajectory", [&] { t.validate(); });
    if (!(o.sample_step > 0.0)) throw ConfigError("observables.sample_step", "must be positive");
    if (!(o.window_start <= o.window_stop)) throw ConfigError("observables.window_stop", "must be >= window_start");
    if (!o.coherence_times.empty() && m.L % 2 != 0)
      throw ConfigError("observables.coherence_times", "coherence needs an even model.L");
    if (cl.enabled) {
      if (cl.d_c > std::max(1, m.L / 2)) throw ConfigError("clustering.d_c", "must lie in [1, L/2]");
      if (cl.snapshot_times.empty()) throw ConfigError("clustering.snapshot_times", "no snapshot times given");
    }
  }
  if (c.mode == Mode::Trajectory || c.mode == Mode::PhaseScan) {
    if (o.window_stop > t.t_max + 1e-9) throw ConfigError("observables.window_stop", "exceeds trajectory.t_max");
  }
  if (c.mode == Mode::OracleCompare) {
    if (!(c.oracle.dt > 0.0)) throw ConfigError("oracle.dt", "must be positive");
    if (c.oracle.trace_time > t.t_max) throw ConfigError("oracle.trace_time", "exceeds trajectory.t_max");
  }
  if (c.mode == Mode::PhaseScan) {
    if (ps.K.empty()) throw ConfigError("phase_scan.K", "empty list");
    if (ps.L.empty()) throw ConfigError("phase_scan.L", "empty list");
    if (ps.h.size() < 2) throw ConfigError("phase_scan.h", "needs at least two fields");
    for (std::size_t i = 1; i < ps.h.size(); ++i)
      if (ps.h[i] <= ps.h[i - 1]) throw ConfigError("phase_scan.h", "fields must be strictly increasing");
    if (!(ps.epsilon >= 0.0 && ps.epsilon < 2.0 / 3.0)) throw ConfigError("phase_scan.epsilon", "must lie in [0, 2/3)");
    for (int L : ps.L)
      for (double h : ps.h) {
        ModelParams q = m;
        q.L = L;
        q.N = L / 2;
        q.r = std::min(m.r, std::max(1, L / 2));
        q.h = h;
        detail::validate_block("model", [&] { q.validate(); });
      }
  }
  if (c.mode == Mode::Hydro) {
    detail::validate_block("hydro", [&] { hy.closure.validate(); });
    if (!(hy.dt > 0.0)) throw ConfigError("hydro.dt", "must be positive");
    if (!(hy.t_max >= 0.0)) throw ConfigError("hydro.t_max", "must be >= 0");
    if (!(hy.noise >= 0.0)) throw ConfigError("hydro.noise", "must be >= 0");
    if (!(hy.track_start <= hy.track_stop)) throw ConfigError("hydro.track_stop", "must be >= track_start");
  }
  if (c.mode == Mode::Classical) {
    detail::validate_block("classical", [&] { cp.params.validate(); });
    if (cp.window_start > cp.sweeps) throw ConfigError("classical.window_start", "exceeds classical.sweeps");
  }
  if (c.mode == Mode::Kolmogorov) {
    if (!(c.kolmogorov.gamma > 0.0)) throw ConfigError("kolmogorov.gamma", "must be positive");
    if (!(c.kolmogorov.epsilon >= -1.0 && c.kolmogorov.epsilon <= 1.0))
      throw ConfigError("kolmogorov.epsilon", "must lie in [-1, 1]");
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// Commented INI listing every key with its default; parses back to defaults.
inline void print_defaults(std::ostream& os) {
  std::string section;
  for (const auto& spec : config_schema()) {
    const std::string key = spec.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      os << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
      section = sec;
    }
    os << "# " << spec.doc << "\n" << key.substr(dot + 1) << " = " << spec.default_value << "\n";
  }
}

}  // namespace aqf
