#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aqf/classical.hpp"

using namespace aqf;
using namespace aqf::classical;

TEST(Classical, EmptyChainNeverChanges) {
  ClassicalParams p;
  p.L = 16;
  p.scale = 1.0;
  ClassicalConfig c(16);
  CounterRng rng(1, 0, Stream::Classical);
  for (int s = 0; s < 100; ++s) EXPECT_EQ(classical_step(c, p, rng), 0);
  EXPECT_EQ(c, ClassicalConfig(16));
}

TEST(Classical, LoneUpParticleDriftsLeft) {
  ClassicalParams p;
  p.L = 10;
  p.K = 0.0;
  p.r = 1;
  p.scale = 0.5;
  ClassicalConfig c(10);
  c.up[4] = 1;
  CounterRng rng(2, 0, Stream::Classical);
  int pos = 4, flips = 0;
  for (int s = 0; s < 2000; ++s) {
    const ClassicalConfig before = c;
    classical_step(c, p, rng);
    ASSERT_EQ(c.particles(), 1);
    int now = -1;
    Spin sp = Spin::Up;
    for (int l = 0; l < 10; ++l) {
      if (c.up[static_cast<std::size_t>(l)]) now = l, sp = Spin::Up;
      if (c.down[static_cast<std::size_t>(l)]) now = l, sp = Spin::Down;
    }
    const int d = wrap(now - pos + 5, 10) - 5;
    // One event per particle per sweep: either a flip or one hop in the
    // direction of its pre-sweep species.
    if (before.up[static_cast<std::size_t>(pos)]) {
      EXPECT_TRUE(d == 0 || d == -1);
    } else {
      EXPECT_TRUE(d == 0 || d == 1);
    }
    if (d != 0) {
      EXPECT_EQ(sp, before.up[static_cast<std::size_t>(pos)] ? Spin::Up : Spin::Down);
    }
    flips += d == 0 && (c.up != before.up || c.down != before.down);
    pos = now;
  }
  EXPECT_GT(flips, 0);
}

TEST(Classical, SweepsPreserveHardCoreAndParticles) {
  ClassicalParams p;
  p.L = 24;
  p.K = 2.0;
  p.r = 3;
  p.scale = 1.0;
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    ClassicalConfig c(24);
    for (auto& x : c.up) x = gen() % 2;
    for (auto& x : c.down) x = gen() % 2;
    const int n0 = c.particles();
    CounterRng rng(9, static_cast<std::uint64_t>(trial), Stream::Classical);
    for (int s = 0; s < 200; ++s) {
      classical_step(c, p, rng);
      ASSERT_EQ(c.particles(), n0);
      for (int l = 0; l < 24; ++l) {
        ASSERT_LE(c.up[static_cast<std::size_t>(l)], 1);
        ASSERT_LE(c.down[static_cast<std::size_t>(l)], 1);
      }
    }
  }
}

TEST(Classical, MagnetizationSquaredExamples) {
  ClassicalConfig c = paired_initial_state(16);
  EXPECT_EQ(c.particles(), 8);
  EXPECT_EQ(magnetization_sq(c), 0.0);
  c.down[0] = 0;
  c.down[1] = 0;
  EXPECT_NEAR(magnetization_sq(c), 4.0 / 256.0, 1e-15);
  ClassicalConfig full(8);
  for (auto& x : full.up) x = 1;
  EXPECT_EQ(magnetization_sq(full), 1.0);
}

TEST(Classical, AlignmentProbability) {
  ClassicalParams p;
  p.L = 8;
  p.K = 2.0;
  p.r = 2;
  ClassicalConfig c(8);
  c.up[3] = 1;
  c.up[4] = 1;
  c.up[5] = 1;
  c.down[1] = 1;
  // m_4 = 1, S_4 = m_2 + m_3 + m_5 + m_6 = 2
  EXPECT_NEAR(alignment_probability(c, 4, p), std::exp(-2.0 / 4.0 * 2.0), 1e-15);
  // m_3 = 1, S_3 = m_1 + m_2 + m_4 + m_5 = -1 + 0 + 1 + 1 = 1
  EXPECT_NEAR(alignment_probability(c, 3, p), std::exp(-0.5), 1e-15);
}

TEST(Classical, RunIsThreadIndependent) {
  ClassicalParams p;
  p.L = 16;
  p.K = 3.0;
  p.r = 2;
  const auto a = run_classical(p, 12, 300, 50, 5, 1);
  const auto b = run_classical(p, 12, 300, 50, 5, 3);
  EXPECT_EQ(a.sweeps, b.sweeps);
  EXPECT_EQ(a.m2_mean, b.m2_mean);
  EXPECT_EQ(a.m2_stderr, b.m2_stderr);
  EXPECT_EQ(a.m2_mean.front(), 0.0);
  EXPECT_NEAR(window_average(a, 0, 0), 0.0, 0.0);
  EXPECT_THROW(window_average(a, 301, 400), ParameterError);
}

TEST(Classical, Validation) {
  ClassicalParams p;
  p.r = 17;
  EXPECT_THROW(p.validate(), ParameterError);
  p = ClassicalParams{};
  p.scale = 0.0;
  EXPECT_THROW(p.validate(), ParameterError);
  EXPECT_THROW(run_classical(ClassicalParams{}, 0, 10, 1, 1), ParameterError);
}

TEST(Kolmogorov, CanonicalCycleMatchesClosedForm) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> g(0.1, 3.0), k(-5.0, 5.0), e(-0.95, 0.95);
  for (int i = 0; i < 100; ++i) {
    const double gamma = g(gen), K = k(gen), eps = e(gen);
    const auto res = kolmogorov_rates(canonical_cycle(K, eps), gamma);
    EXPECT_NEAR(res.forward / closed_form_forward(gamma, K, eps), 1.0, 1e-12);
    EXPECT_NEAR(res.backward / closed_form_backward(gamma, K, eps), 1.0, 1e-12);
    EXPECT_NEAR(res.ratio / (std::exp(-K) * std::pow((1.0 + eps) / (1.0 - eps), 2)), 1.0, 1e-12);
  }
}

TEST(Kolmogorov, FullyDirectedHoppingHasNoReverse) {
  const auto res = kolmogorov_rates(canonical_cycle(1.0, 1.0), 1.0);
  EXPECT_GT(res.forward, 0.0);
  EXPECT_EQ(res.backward, 0.0);
  EXPECT_TRUE(std::isinf(res.ratio));
}

// Any walk followed by its own reversal is a closed cycle whose forward and
// backward products coincide.
TEST(Kolmogorov, RetracedWalksSatisfyDetailedBalance) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    CycleSpec spec;
    spec.L = 8;
    spec.r = 1 + static_cast<int>(gen() % 4);
    spec.K = (trial % 2 == 0) ? 0.0 : 1.7;
    spec.epsilon = (trial % 2 == 0) ? 0.0 : 0.3;
    for (int l = 0; l < 8; ++l)
      for (Spin s : {Spin::Up, Spin::Down})
        if (gen() % 3 == 0) spec.start |= mode_bit(l, s);
    Mask c = spec.start;
    std::vector<ElementaryTransition> walk;
    for (int n = 0; n < 6; ++n) {
      std::vector<ElementaryTransition> allowed;
      for (int l = 0; l < 8; ++l)
        for (Spin s : {Spin::Up, Spin::Down}) {
          if (!occupied(c, l, s)) continue;
          for (int d : {-1, 1})
            if (!occupied(c, wrap(l + d, 8), s)) allowed.push_back({TransitionKind::Hop, l, s, d});
          if (!occupied(c, l, flipped(s))) allowed.push_back({TransitionKind::Flip, l, s, 0});
        }
      if (allowed.empty()) break;
      walk.push_back(allowed[gen() % allowed.size()]);
      c = apply_transition(c, walk.back(), 8);
    }
    if (walk.empty()) continue;
    spec.steps = walk;
    for (std::size_t k = walk.size(); k-- > 0;) spec.steps.push_back(reverse(walk[k], 8));
    const auto res = kolmogorov_rates(spec, 1.3);
    EXPECT_NEAR(res.forward / res.backward, 1.0, 1e-12);
  }
}

TEST(Kolmogorov, StructuralErrors) {
  CycleSpec open = canonical_cycle(1.0, 0.0);
  open.steps.pop_back();
  EXPECT_THROW(kolmogorov_rates(open, 1.0), StructuralError);
  CycleSpec blocked = canonical_cycle(1.0, 0.0);
  blocked.steps.front() = {TransitionKind::Hop, 2, Spin::Up, -1};  // site 1 is occupied
  EXPECT_THROW(kolmogorov_rates(blocked, 1.0), StructuralError);
  CycleSpec empty = canonical_cycle(1.0, 0.0);
  empty.steps.clear();
  EXPECT_THROW(kolmogorov_rates(empty, 1.0), StructuralError);
  EXPECT_THROW(kolmogorov_rates(canonical_cycle(1.0, 1.5), 1.0), ParameterError);
}
