#pragma once

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "tunnelcat/types.hpp"

namespace testing {

using tunnelcat::Complex;
using tunnelcat::ComplexMatrix;

inline ComplexMatrix random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ComplexMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(rng), g(rng));
  return (a + a.adjoint()) / 2.0;
}

inline ComplexMatrix random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = Complex(g(rng), g(rng));
  ComplexMatrix rho = b * b.adjoint();
  return rho / rho.trace();
}

/// Reference propagator from Eigen's general matrix exponential.
inline ComplexMatrix expm_reference(const ComplexMatrix& h, double t) {
  const ComplexMatrix a = Complex(0.0, -t) * h;
  return a.exp();
}

inline double frob(const ComplexMatrix& m) { return m.norm(); }

}  // namespace testing
