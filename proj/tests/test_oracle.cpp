#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <random>

#include "aqf/classical.hpp"
#include "aqf/ensemble.hpp"
#include "aqf/oracle.hpp"
#include "helpers.hpp"

using namespace aqf;
using aqf::test::basis;
using aqf::test::params;
using aqf::test::random_state;
using oracle::Matrix;

namespace {

Matrix random_density(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = {g(gen), g(gen)};
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

}  // namespace

TEST(Oracle, VanishesWhenEverythingIsBlocked) {
  auto b = basis(3, 6);
  const auto p = params(3, 6, 0.0, 2.0, 1);
  const oracle::DensityMatrix rho{b, Matrix::Identity(1, 1), 0.0};
  EXPECT_EQ(oracle::lindblad_rhs(rho, p).entries.norm(), 0.0);
}

TEST(Oracle, RhsIsTracelessAndHermitian) {
  auto b = basis(3, 3);
  const auto p = params(3, 3, 0.7, 2.0, 1);
  const oracle::Lindbladian lv(b, p);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix rho = random_density(static_cast<Eigen::Index>(b->size()), s);
    const Matrix d = lv.rhs(rho);
    EXPECT_NEAR(std::abs(d.trace()), 0.0, 1e-12);
    EXPECT_NEAR((d - d.adjoint()).norm(), 0.0, 1e-12);
  }
}

TEST(Oracle, ZeroDurationReturnsInitialState) {
  auto b = basis(2, 1);
  const auto rho0 = oracle::pure_state(initial_state(b, InitialState::PlusProduct));
  const auto out = oracle::integrate(rho0, params(2, 1, 0.5, 1.0, 1), {0.0});
  EXPECT_EQ((out.front().entries - rho0.entries).norm(), 0.0);
}

// Directed hopping only: each species circulates independently, p(up at 0) =
// 1/4 + 1/4 exp(-2t) from the plus-product state.
TEST(Oracle, DirectedHoppingRelaxation) {
  auto p = params(2, 1, 0.0, 1.0, 1);
  p.gamma_A = 0.0;
  auto b = basis(2, 1);
  const auto rho0 = oracle::pure_state(initial_state(b, InitialState::PlusProduct));
  const std::vector<double> times{0.5, 1.0, 2.0, 8.0};
  const auto out = oracle::integrate(rho0, p, times, 0.001);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double near = 0.25 + 0.25 * std::exp(-2.0 * times[k]);
    const double far = 0.25 - 0.25 * std::exp(-2.0 * times[k]);
    for (Spin s : {Spin::Up, Spin::Down}) {
      const auto i0 = static_cast<Eigen::Index>(b->index_of(mode_bit(0, s)));
      const auto i1 = static_cast<Eigen::Index>(b->index_of(mode_bit(1, s)));
      EXPECT_NEAR(out[k].entries(i0, i0).real(), near, 1e-10);
      EXPECT_NEAR(out[k].entries(i1, i1).real(), far, 1e-10);
    }
  }
}

// At h = 0 the diagonal obeys a classical master equation. Its rates come
// from the elementary-transition model: hops with epsilon = 1, flips with
// the squared alignment weight (coupling doubled).
TEST(Oracle, ZeroFieldDiagonalFollowsClassicalMasterEquation) {
  const double K = 1.3;
  auto p = params(3, 3, 0.0, K, 1);
  auto b = basis(3, 3);
  const auto n = static_cast<Eigen::Index>(b->size());
  classical::CycleSpec spec;
  spec.L = 3;
  spec.r = 1;
  spec.K = 2.0 * K;
  spec.epsilon = 1.0;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < b->size(); ++i) {
    const Mask c = (*b)[i];
    for (int l = 0; l < 3; ++l)
      for (Spin s : {Spin::Up, Spin::Down}) {
        if (!occupied(c, l, s)) continue;
        std::vector<classical::ElementaryTransition> moves{
            {classical::TransitionKind::Hop, l, s, s == Spin::Up ? -1 : +1}};
        if (!occupied(c, l, flipped(s))) moves.push_back({classical::TransitionKind::Flip, l, s, 0});
        for (const auto& t : moves) {
          const Mask d = classical::apply_transition(c, t, 3);
          if (total_particles(d) != 3) continue;
          double rate = 0.0;
          try {
            rate = classical::elementary_rate(c, t, spec, 1.0);
          } catch (const StructuralError&) {
            continue;  // blocked
          }
          const auto j = static_cast<Eigen::Index>(b->index_of(d));
          W(j, static_cast<Eigen::Index>(i)) += rate;
          W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= rate;
        }
      }
  }
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p0(n);
  for (Eigen::Index i = 0; i < n; ++i) p0(i) = u(gen);
  p0 /= p0.sum();
  const oracle::DensityMatrix rho0{b, p0.cast<Amplitude>().asDiagonal(), 0.0};
  const std::vector<double> times{0.5, 1.5, 3.0};
  const auto out = oracle::integrate(rho0, p, times, 0.002);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Eigen::VectorXd ref = (W * times[k]).exp() * p0;
    for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(out[k].entries(i, i).real(), ref(i), 1e-9);
  }
}

TEST(Oracle, SuperoperatorSpectrumIsContractive) {
  for (auto [L, N] : {std::pair{3, 2}, std::pair{4, 2}}) {
    const auto p = params(L, N, 0.6, 2.0, 1);
    const oracle::Lindbladian lv(basis(L, N), p);
    const Matrix S = lv.superoperator();
    Eigen::ComplexEigenSolver<Matrix> es(S, false);
    double max_re = -INFINITY, min_abs = INFINITY;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      max_re = std::max(max_re, es.eigenvalues()(i).real());
      min_abs = std::min(min_abs, std::abs(es.eigenvalues()(i)));
    }
    EXPECT_LE(max_re, 1e-10);
    EXPECT_LE(min_abs, 1e-10);  // a steady state exists
  }
}

TEST(Oracle, SuperoperatorAgreesWithRhs) {
  const auto p = params(3, 2, 0.4, 1.5, 1);
  auto b = basis(3, 2);
  const oracle::Lindbladian lv(b, p);
  const auto n = static_cast<Eigen::Index>(b->size());
  const Matrix rho = random_density(n, 7);
  Eigen::VectorXcd v(n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) v(i * n + j) = rho(i, j);
  const Eigen::VectorXcd w = lv.superoperator() * v;
  const Matrix d = lv.rhs(rho);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) EXPECT_NEAR(std::abs(w(i * n + j) - d(i, j)), 0.0, 1e-12);
}

TEST(Oracle, InvariantsHoldAlongIntegration) {
  const auto p = params(4, 3, 0.9, 3.0, 2);
  auto b = basis(4, 3);
  const auto rho0 = oracle::pure_state(random_state(b, 2));
  const auto out = oracle::integrate(rho0, p, {1.0, 2.0, 4.0}, 0.005);
  for (const auto& r : out) EXPECT_EQ(oracle::check_invariants(r.entries), "");
}

TEST(Oracle, Guards) {
  const auto p = params(5, 3, 0.5, 1.0, 2);
  const oracle::Lindbladian lv(basis(5, 3), p);  // dim 120
  EXPECT_NO_THROW(lv.rhs(Matrix::Identity(120, 120) / 120.0));
  const oracle::Lindbladian big(basis(6, 3), params(6, 3, 0.5, 1.0, 2));  // dim 220
  EXPECT_THROW(big.superoperator(), ResourceError);
  EXPECT_THROW(oracle::Lindbladian(basis(8, 6), params(8, 6, 0.5, 1.0, 2)), ResourceError);  // dim 8008
}

TEST(Oracle, InvariantCheckDetectsViolations) {
  Matrix m = Matrix::Identity(3, 3) / 3.0;
  EXPECT_EQ(oracle::check_invariants(m), "");
  m(0, 0) = 0.5;
  EXPECT_NE(oracle::check_invariants(m), "");
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_NE(oracle::check_invariants(neg), "");
  EXPECT_NEAR(oracle::trace_distance(Matrix::Identity(2, 2) / 2.0, neg), 1.0, 1e-12);
}

// Ensemble-averaged |psi><psi| converges to the oracle density matrix.
TEST(Oracle, TrajectoryEnsembleConvergesInTraceDistance) {
  auto p = params(3, 2, 0.5, 2.0, 1);
  auto b = basis(3, 2);
  TrajectoryConfig cfg;
  cfg.t_max = 3.0;
  cfg.density_times = {3.0};
  const std::uint64_t n_r = 1000;
  const auto series = run_ensemble(p, cfg, n_r);
  const auto avg = series.density_average(0);
  const auto n = static_cast<Eigen::Index>(b->size());
  const Matrix traj = Eigen::Map<const Matrix>(avg.data(), n, n).transpose();
  const auto ref = oracle::integrate(oracle::pure_state(initial_state(b, cfg.initial_state)), p, {3.0});
  EXPECT_LE(oracle::trace_distance(traj, ref.front().entries), 5.0 / std::sqrt(static_cast<double>(n_r)));
}
