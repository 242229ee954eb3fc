#pragma once

// Dense density-matrix reference solver for small lattices.
//
//   d rho / dt = -i [H, rho] + sum_a Gamma_a (X_a rho X_a^+ - 1/2 {X_a^+ X_a, rho})
//
// This normalization makes Gamma_a <X_a^+ X_a> the jump rate of channel a,
// the same convention as the trajectory engine.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "aqf/error.hpp"
#include "aqf/fock.hpp"
#include "aqf/model.hpp"

namespace aqf::oracle {

using Matrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Amplitude>;

inline constexpr std::size_t kMaxDimension = 5000;
inline constexpr std::size_t kMaxSuperoperatorDimension = 200;

struct DensityMatrix {
  std::shared_ptr<const FockBasis> basis;
  Matrix entries;
  double time = 0.0;
};

inline void require_dimension(std::size_t dim, std::size_t limit, const char* what) {
  if (dim > limit)
    throw ResourceError(std::string(what) + ": basis dimension " + std::to_string(dim) + " exceeds limit " +
                        std::to_string(limit));
}

// Sparse matrix of one jump operator (each column has at most one entry).
inline SparseMatrix jump_matrix(const FockBasis& basis, const JumpChannel& ch, const ModelParams& p) {
  std::vector<Eigen::Triplet<Amplitude>> t;
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (auto tr = apply_channel(basis[i], ch, p))
      t.emplace_back(static_cast<int>(basis.rank(tr->target)), static_cast<int>(i), tr->amplitude);
  const auto n = static_cast<Eigen::Index>(basis.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

inline SparseMatrix hamiltonian_matrix(const FockBasis& basis, const ModelParams& p) {
  std::vector<Eigen::Triplet<Amplitude>> t;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Mask c = basis[i];
    for (int l = 0; l < p.L; ++l) {
      const unsigned s = local_state(c, l);
      if (s == 1u || s == 2u)
        t.emplace_back(static_cast<int>(basis.rank(c ^ site_bits(l))), static_cast<int>(i), Amplitude(-p.h));
    }
  }
  const auto n = static_cast<Eigen::Index>(basis.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Precomputed operators for repeated right-hand-side evaluations.
class Lindbladian {
 public:
  Lindbladian(std::shared_ptr<const FockBasis> basis, const ModelParams& params)
      : basis_(std::move(basis)), params_(params) {
    params_.validate();
    require_compatible(*basis_, params_);
    require_dimension(basis_->size(), kMaxDimension, "lindblad_rhs");
    H_ = hamiltonian_matrix(*basis_, params_);
    decay_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_->size()));
    for (const auto& ch : jump_channels(params_.L)) {
      const double rate = channel_rate(ch, params_);
      SparseMatrix X = jump_matrix(*basis_, ch, params_);
      if (rate == 0.0 || X.nonZeros() == 0) continue;
      for (int k = 0; k < X.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(X, k); it; ++it) decay_(it.col()) += rate * std::norm(it.value());
      jumps_.push_back(std::move(X));
      rates_.push_back(rate);
    }
  }

  const FockBasis& basis() const noexcept { return *basis_; }
  const std::shared_ptr<const FockBasis>& basis_ptr() const noexcept { return basis_; }
  const ModelParams& params() const noexcept { return params_; }
  const SparseMatrix& hamiltonian() const noexcept { return H_; }
  const std::vector<SparseMatrix>& jumps() const noexcept { return jumps_; }
  const std::vector<double>& rates() const noexcept { return rates_; }

  Matrix rhs(const Matrix& rho) const {
    const Amplitude I(0.0, 1.0);
    const Matrix Hrho = H_ * rho;
    Matrix out = -I * (Hrho - Hrho.adjoint());  // H Hermitian, rho Hermitian
    for (std::size_t a = 0; a < jumps_.size(); ++a) {
      const Matrix Xrho = jumps_[a] * rho;
      out.noalias() += rates_[a] * (Xrho * jumps_[a].adjoint());
    }
    const auto n = rho.rows();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) out(i, j) -= 0.5 * (decay_(i) + decay_(j)) * rho(i, j);
    return out;
  }

  // Row-major vectorization: vec(rho)[i * n + j] = rho(i, j).
  Matrix superoperator() const {
    const auto n = static_cast<Eigen::Index>(basis_->size());
    require_dimension(static_cast<std::size_t>(n), kMaxSuperoperatorDimension, "superoperator");
    Matrix S(n * n, n * n);
    Matrix unit = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        unit(i, j) = 1.0;
        const Matrix col = rhs_general(unit);
        unit(i, j) = 0.0;
        for (Eigen::Index a = 0; a < n; ++a)
          for (Eigen::Index b = 0; b < n; ++b) S(a * n + b, i * n + j) = col(a, b);
      }
    return S;
  }

 private:
  // Right-hand side without assuming a Hermitian argument.
  Matrix rhs_general(const Matrix& rho) const {
    const Amplitude I(0.0, 1.0);
    Matrix out = -I * (H_ * rho - rho * H_);
    for (std::size_t a = 0; a < jumps_.size(); ++a) out += rates_[a] * (jumps_[a] * rho * jumps_[a].adjoint());
    const auto n = rho.rows();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) out(i, j) -= 0.5 * (decay_(i) + decay_(j)) * rho(i, j);
    return out;
  }

  std::shared_ptr<const FockBasis> basis_;
  ModelParams params_;
  SparseMatrix H_;
  std::vector<SparseMatrix> jumps_;
  std::vector<double> rates_;
  Eigen::VectorXd decay_;
};

inline DensityMatrix lindblad_rhs(const DensityMatrix& rho, const ModelParams& params) {
  require_dimension(rho.basis->size(), kMaxDimension, "lindblad_rhs");
  const Lindbladian lv(rho.basis, params);
  return {rho.basis, lv.rhs(rho.entries), rho.time};
}

inline DensityMatrix pure_state(const StateVector& psi) {
  Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes.data(), static_cast<Eigen::Index>(psi.size()));
  return {psi.basis, v * v.adjoint(), 0.0};
}

struct InvariantTolerance {
  double hermiticity = 1e-10;
  double trace = 1e-10;
  double positivity = 1e-8;
};

// Empty string when rho satisfies the density-matrix invariants.
inline std::string check_invariants(const Matrix& rho, const InvariantTolerance& tol = {}) {
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.hermiticity) return "hermiticity violated by " + std::to_string(herm);
  const double tr = std::abs(rho.trace() - Amplitude(1.0));
  if (tr > tol.trace) return "trace deviates from 1 by " + std::to_string(tr);
  const Matrix sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol.positivity)
    return "negative eigenvalue " + std::to_string(es.eigenvalues().minCoeff());
  return {};
}

// RK4 from rho0; returns rho at every requested time (ascending, multiples of
// dt up to rounding). Throws IntegrationError when an invariant fails.
inline std::vector<DensityMatrix> integrate(const Lindbladian& lv, const DensityMatrix& rho0,
                                            const std::vector<double>& output_times, double dt = 0.005,
                                            const InvariantTolerance& tol = {}) {
  if (!(dt > 0.0)) throw ParameterError("oracle dt must be positive");
  std::vector<DensityMatrix> out;
  Matrix rho = rho0.entries;
  double t = rho0.time;
  long long step = 0;
  for (double target : output_times) {
    if (target < t - 1e-12) throw ParameterError("oracle output times must be ascending");
    const auto steps = static_cast<long long>(std::llround((target - rho0.time) / dt));
    for (; step < steps; ++step) {
      const Matrix k1 = lv.rhs(rho);
      const Matrix k2 = lv.rhs(rho + (0.5 * dt) * k1);
      const Matrix k3 = lv.rhs(rho + (0.5 * dt) * k2);
      const Matrix k4 = lv.rhs(rho + dt * k3);
      rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t = rho0.time + static_cast<double>(steps) * dt;
    if (auto msg = check_invariants(rho, tol); !msg.empty())
      throw IntegrationError("oracle invariant failure: " + msg + "; reduce dt", t);
    out.push_back({rho0.basis, rho, t});
  }
  return out;
}

inline std::vector<DensityMatrix> integrate(const DensityMatrix& rho0, const ModelParams& params,
                                            const std::vector<double>& output_times, double dt = 0.005) {
  const Lindbladian lv(rho0.basis, params);
  return integrate(lv, rho0, output_times, dt);
}

// Tr(rho O) for diagonal O with entries f(configuration).
template <class F>
double diagonal_expectation(const DensityMatrix& rho, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < rho.basis->size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    s += rho.entries(k, k).real() * f((*rho.basis)[i]);
  }
  return s;
}

inline double magnetization_moment(const DensityMatrix& rho, int power) {
  return diagonal_expectation(rho, [power](Mask c) { return std::pow(static_cast<double>(magnetization(c)), power); });
}

// 1/2 || a - b ||_1 for Hermitian arguments.
inline double trace_distance(const Matrix& a, const Matrix& b) {
  const Matrix d = 0.5 * ((a - b) + (a - b).adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace aqf::oracle
