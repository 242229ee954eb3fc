#pragma once

#include <complex>
#include <memory>
#include <random>

#include "aqf/fock.hpp"
#include "aqf/model.hpp"

namespace aqf::test {

inline std::shared_ptr<const FockBasis> basis(int L, int N) { return std::make_shared<const FockBasis>(L, N); }

inline StateVector random_state(std::shared_ptr<const FockBasis> b, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  StateVector v(std::move(b));
  for (auto& a : v.amplitudes) a = {g(gen), g(gen)};
  v.normalize();
  return v;
}

inline ModelParams params(int L, int N, double h, double K, int r) {
  ModelParams p;
  p.L = L;
  p.N = N;
  p.h = h;
  p.K = K;
  p.r = r;
  return p;
}

}  // namespace aqf::test
