#pragma once

#include "tunnelcat/types.hpp"

namespace tunnelcat {

/// Two-mode number basis for N bosons with cached Jordan-Schwinger operators.
///
/// Basis index k counts bosons in the LEFT well: |N> is all-left and |0> is
/// all-right, so J_z |k> = (N - 2k)/2 |k>. Every module uses this convention,
/// and joint spaces are always ordered system (slow index) x ancilla.
class FockSpace {
 public:
  /// Throws std::invalid_argument for n < 1.
  explicit FockSpace(int n_particles);

  int n_particles() const { return n_; }
  int dim() const { return n_ + 1; }

  const ComplexMatrix& jx() const { return jx_; }
  const ComplexMatrix& jy() const { return jy_; }
  const ComplexMatrix& jz() const { return jz_; }

  /// Operator for axis 0 = x, 1 = y, 2 = z.
  const ComplexMatrix& j(int axis) const;

 private:
  int n_;
  ComplexMatrix jx_, jy_, jz_;
};

FockSpace build_fock_space(int n);

/// Rank-1 projector |k><k| onto the state with k bosons in the left well.
ComplexMatrix localized_state(const FockSpace& space, int k);

/// Kronecker product; the first factor is the slow index.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Tr_A of a joint operator on C^{dim_s} (x) C^{dim_a}.
ComplexMatrix partial_trace_ancilla(const ComplexMatrix& rho_sa, int dim_s, int dim_a);

/// Diagonal of J_z for a space of dimension `dim`, i.e. (dim - 1 - 2k)/2.
RealVector jz_diagonal(int dim);

}  // namespace tunnelcat
