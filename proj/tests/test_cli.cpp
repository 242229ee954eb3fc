#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aqf/config.hpp"
#include "aqf/runner.hpp"

using namespace aqf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_key(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

RunSummary run_in(const RunConfig& c, const fs::path& dir) {
  ::setenv("AQF_OUTPUT_DIR", dir.c_str(), 1);
  auto s = run(c);
  ::unsetenv("AQF_OUTPUT_DIR");
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aqf_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

const char* kSmallTrajectory = R"(
[run]
mode = trajectory
trajectories = 20
threads = 1
[model]
L = 4
N = 2
r = 2
[trajectory]
t_max = 2
[observables]
window_start = 1
window_stop = 2
coherence_times = 1,2
)";

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  std::ostringstream os;
  print_defaults(os);
  const RunConfig a = parse_config_text(os.str());
  const RunConfig b = parse_config_text("");
  EXPECT_EQ(a.canonical_text(), b.canonical_text());
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.model.L, 8);
  EXPECT_EQ(a.model.N, 4);
  EXPECT_DOUBLE_EQ(a.model.K, 3.8);
  EXPECT_EQ(a.echo.size(), config_schema().size());
}

TEST(Config, HashTracksValues) {
  const auto a = parse_config_text("[model]\nh = 0.2\n");
  const auto b = parse_config_text("[model]\nh = 0.20\n");
  const auto c = parse_config_text("[model]\nh = 0.3\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(error_key("[model]\nbogus = 1\n"), "model.bogus");
  EXPECT_EQ(error_key("[model]\nL = 40\n"), "model.L");
  EXPECT_EQ(error_key("[model]\nL = 8\nr = 7\n"), "model.r");
  EXPECT_EQ(error_key("[model]\nh = abc\n"), "model.h");
  EXPECT_EQ(error_key("[run]\nmode = sideways\n"), "run.mode");
  EXPECT_EQ(error_key("[model]\nL = 6\nN = 13\n"), "model.N");
  EXPECT_EQ(error_key("[observables]\nwindow_stop = 80\n"), "observables.window_stop");
  EXPECT_EQ(error_key("[run]\nmode = phase-scan\n[phase_scan]\nh = 0.5\n"), "phase_scan.h");
  EXPECT_EQ(error_key("[hydro]\ngamma_A = 0\n[run]\nmode = hydro\n"), "hydro.gamma_A");
  // Blocks the mode does not use are not validated.
  EXPECT_EQ(error_key("[hydro]\ngamma_A = 0\n"), "<none>");
}

TEST(Config, NumberLists) {
  EXPECT_EQ(parse_number_list("1, 2.5,4"), (std::vector<double>{1.0, 2.5, 4.0}));
  const auto g = parse_number_list("0.1:3.0:0.1");
  ASSERT_EQ(g.size(), 30u);
  EXPECT_EQ(g[2], 0.3);
  EXPECT_EQ(g.back(), 3.0);
  EXPECT_TRUE(parse_number_list("").empty());
  EXPECT_THROW(parse_number_list("1:2"), ParameterError);
  EXPECT_THROW(parse_number_list("1,x"), ParameterError);
  EXPECT_THROW(parse_number_list("2:1:0.5"), ParameterError);
}

TEST(Transition, ConstantBinderIsCensored) {
  std::vector<ScanPoint> scan;
  for (int k = 1; k <= 30; ++k) scan.push_back({0.1 * k, 2.0 / 3.0, 0.0});
  const auto e = estimate_transition(scan);
  EXPECT_EQ(e.censoring, Censoring::AboveRange);
}

TEST(Transition, LinearDecreaseCrossesAtHalf) {
  std::vector<ScanPoint> scan;
  for (int k = 1; k <= 30; ++k) {
    const double h = 0.1 * k;
    scan.push_back({h, 2.0 / 3.0 - 0.04 * h, 0.0});
  }
  const auto e = estimate_transition(scan, 0.02);
  EXPECT_EQ(e.censoring, Censoring::None);
  EXPECT_NEAR(e.h_star, 0.5, 1e-9);
  EXPECT_LE(e.error, 0.05 + 1e-12);
}

TEST(Transition, BelowRangeAndValidation) {
  EXPECT_EQ(estimate_transition({{0.1, 0.2, 0.0}, {0.2, 0.1, 0.0}}).censoring, Censoring::BelowRange);
  EXPECT_THROW(estimate_transition({{0.1, 0.6, 0.0}}), ParameterError);
  EXPECT_THROW(estimate_transition({{0.2, 0.6, 0.0}, {0.1, 0.5, 0.0}}), ParameterError);
}

TEST(Runner, IdenticalConfigsGiveIdenticalTables) {
  const RunConfig c = parse_config_text(kSmallTrajectory);
  const auto d1 = scratch("a"), d2 = scratch("b");
  const auto s1 = run_in(c, d1);
  const auto s2 = run_in(c, d2);
  ASSERT_EQ(s1.files, s2.files);
  ASSERT_FALSE(s1.files.empty());
  for (const auto& f : s1.files) {
    const std::string a = slurp(d1 / f);
    EXPECT_EQ(a, slurp(d2 / f)) << f;
    EXPECT_EQ(a.rfind("# config-hash: " + c.hash_hex() + "\n", 0), 0u) << f;
  }
  EXPECT_TRUE(fs::exists(d1 / "metadata.json"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Runner, ThreadCountDoesNotChangeNumbers) {
  const RunConfig c1 = parse_config_text(kSmallTrajectory);
  std::string text = kSmallTrajectory;
  text.replace(text.find("threads = 1"), 11, "threads = 3");
  const RunConfig c3 = parse_config_text(text);
  ASSERT_EQ(c3.threads, 3u);
  const auto d1 = scratch("t1"), d3 = scratch("t3");
  run_in(c1, d1);
  run_in(c3, d3);
  // The hash line differs because threads is part of the echo.
  const auto body = [](const std::string& t) { return t.substr(t.find('\n') + 1); };
  EXPECT_EQ(body(slurp(d1 / "series.tsv")), body(slurp(d3 / "series.tsv")));
  EXPECT_EQ(body(slurp(d1 / "coherence.tsv")), body(slurp(d3 / "coherence.tsv")));
  fs::remove_all(d1);
  fs::remove_all(d3);
}

TEST(Runner, KolmogorovTable) {
  const RunConfig c = parse_config_text("[run]\nmode = kolmogorov\n[kolmogorov]\ngamma = 1\nK = 1\nepsilon = 0\n");
  const auto d = scratch("k");
  const auto s = run_in(c, d);
  EXPECT_NEAR(s.values["ratio"].get<double>(), std::exp(-1.0), 1e-15);
  std::ifstream in(d / "kolmogorov.tsv");
  std::string hash, header, row;
  std::getline(in, hash);
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "gamma\tK\tepsilon\tforward\tbackward\tratio\tforward_closed\tbackward_closed");
  std::istringstream fields(row);
  double g, K, eps, fwd, bwd, ratio, fc, bc;
  fields >> g >> K >> eps >> fwd >> bwd >> ratio >> fc >> bc;
  EXPECT_NEAR(fwd, fc, 1e-15);
  EXPECT_NEAR(bwd, bc, 1e-15);
  fs::remove_all(d);
}
