#pragma once

#include <algorithm>
#include <cmath>

#include "tunnelcat/types.hpp"

// Forward-mode dual numbers a + b eps with eps^2 = 0, both as real scalars
// and as (value, tangent) pairs of whole complex matrices.

namespace tunnelcat {

struct DualReal {
  double v = 0.0;
  double d = 0.0;

  friend DualReal operator+(DualReal a, DualReal b) { return {a.v + b.v, a.d + b.d}; }
  friend DualReal operator-(DualReal a, DualReal b) { return {a.v - b.v, a.d - b.d}; }
  friend DualReal operator*(DualReal a, DualReal b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend DualReal operator/(DualReal a, DualReal b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
  }
};

inline DualReal softplus(DualReal x) {
  const double sig = 1.0 / (1.0 + std::exp(-x.v));
  return {std::max(x.v, 0.0) + std::log1p(std::exp(-std::abs(x.v))), sig * x.d};
}

inline DualReal logistic(DualReal x) {
  const double s = 1.0 / (1.0 + std::exp(-x.v));
  return {s, s * (1.0 - s) * x.d};
}

struct DualMatrix {
  ComplexMatrix value;
  ComplexMatrix tangent;

  static DualMatrix constant(const ComplexMatrix& m) {
    return {m, ComplexMatrix::Zero(m.rows(), m.cols())};
  }

  DualMatrix adjoint() const { return {value.adjoint(), tangent.adjoint()}; }

  DualMatrix& operator+=(const DualMatrix& o) {
    value += o.value;
    tangent += o.tangent;
    return *this;
  }

  friend DualMatrix operator+(const DualMatrix& a, const DualMatrix& b) {
    return {a.value + b.value, a.tangent + b.tangent};
  }
  friend DualMatrix operator-(const DualMatrix& a, const DualMatrix& b) {
    return {a.value - b.value, a.tangent - b.tangent};
  }
  friend DualMatrix operator*(const DualMatrix& a, const DualMatrix& b) {
    ComplexMatrix t = a.tangent * b.value;
    t.noalias() += a.value * b.tangent;
    return {a.value * b.value, std::move(t)};
  }
  friend DualMatrix operator*(double s, const DualMatrix& a) { return {s * a.value, s * a.tangent}; }
  friend DualMatrix operator*(Complex s, const DualMatrix& a) {
    return {s * a.value, s * a.tangent};
  }
  friend DualMatrix operator*(DualReal s, const DualMatrix& a) {
    return {s.v * a.value, s.d * a.value + s.v * a.tangent};
  }
};

/// exp(-i H t) for dual H and dual t, by scaling and squaring of a Taylor
/// series truncated once terms fall below double precision.
DualMatrix expm_minus_i(const DualMatrix& h, DualReal t);

}  // namespace tunnelcat
