#include "tunnelcat/types.hpp"

#include <cmath>
#include <sstream>

namespace tunnelcat {

double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool approx_equal(const ComplexMatrix& a, const ComplexMatrix& b, double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return max_abs(a - b) <= tol;
}

bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol;
}

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream msg;
    msg << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw std::invalid_argument(msg.str());
  }
}

double min_eigenvalue(const ComplexMatrix& m) {
  const ComplexMatrix herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

void require_density_matrix(const ComplexMatrix& rho, const char* what, double tol,
                            double psd_tol) {
  require_square(rho, what);
  std::ostringstream msg;
  if (!is_hermitian(rho, tol)) {
    msg << what << ": density matrix is not Hermitian";
    throw std::invalid_argument(msg.str());
  }
  const double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > tol) {
    msg << what << ": density matrix trace is " << tr << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
  if (const double lo = min_eigenvalue(rho); lo < -psd_tol) {
    msg << what << ": density matrix has negative eigenvalue " << lo;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace tunnelcat
