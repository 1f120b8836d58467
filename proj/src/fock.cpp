#include "tunnelcat/fock.hpp"

#include <cmath>
#include <sstream>

namespace tunnelcat {

FockSpace::FockSpace(int n_particles) : n_(n_particles) {
  if (n_particles < 1) {
    throw std::invalid_argument("FockSpace: particle count must be >= 1");
  }
  const int d = dim();
  const double n = n_;
  jx_ = ComplexMatrix::Zero(d, d);
  jy_ = ComplexMatrix::Zero(d, d);
  jz_ = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    jz_(k, k) = 0.5 * (n - 2.0 * k);
    if (k + 1 < d) {
      // <k+1| a^dag b |k> = sqrt((k+1)(N-k)); its adjoint fills <k|.|k+1>.
      const double raise = 0.5 * std::sqrt((k + 1.0) * (n - k));
      jx_(k + 1, k) = raise;
      jx_(k, k + 1) = raise;
      jy_(k + 1, k) = Complex(0.0, raise);
      jy_(k, k + 1) = Complex(0.0, -raise);
    }
  }
}

const ComplexMatrix& FockSpace::j(int axis) const {
  switch (axis) {
    case 0: return jx_;
    case 1: return jy_;
    case 2: return jz_;
    default: throw std::out_of_range("FockSpace::j: axis must be 0, 1 or 2");
  }
}

FockSpace build_fock_space(int n) { return FockSpace(n); }

ComplexMatrix localized_state(const FockSpace& space, int k) {
  if (k < 0 || k > space.n_particles()) {
    std::ostringstream msg;
    msg << "localized_state: k=" << k << " outside [0, " << space.n_particles() << "]";
    throw std::out_of_range(msg.str());
  }
  ComplexMatrix rho = ComplexMatrix::Zero(space.dim(), space.dim());
  rho(k, k) = 1.0;
  return rho;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix partial_trace_ancilla(const ComplexMatrix& rho_sa, int dim_s, int dim_a) {
  if (dim_s < 1 || dim_a < 1 || rho_sa.rows() != dim_s * dim_a || rho_sa.cols() != rho_sa.rows()) {
    std::ostringstream msg;
    msg << "partial_trace_ancilla: matrix is " << rho_sa.rows() << "x" << rho_sa.cols()
        << " but dims are " << dim_s << "*" << dim_a;
    throw std::invalid_argument(msg.str());
  }
  ComplexMatrix out(dim_s, dim_s);
  for (int i = 0; i < dim_s; ++i) {
    for (int j = 0; j < dim_s; ++j) {
      out(i, j) = rho_sa.block(i * dim_a, j * dim_a, dim_a, dim_a).trace();
    }
  }
  return out;
}

RealVector jz_diagonal(int dim) {
  RealVector d(dim);
  for (int k = 0; k < dim; ++k) d(k) = 0.5 * (dim - 1 - 2.0 * k);
  return d;
}

}  // namespace tunnelcat
