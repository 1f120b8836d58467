#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tunnelcat {

using Complex = std::complex<double>;

/// Dense square complex matrix. Operators, density matrices and propagators
/// all share this representation; joint spaces never exceed 81x81.
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Raised when a computation produces a result that violates a numerical
/// invariant (non-convergence, loss of positivity, NaN, trace drift).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest absolute entry.
double max_abs(const ComplexMatrix& m);

/// Entrywise comparison with an absolute tolerance.
bool approx_equal(const ComplexMatrix& a, const ComplexMatrix& b, double tol = 1e-12);

bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12);

/// Throws std::invalid_argument unless `m` is square.
void require_square(const ComplexMatrix& m, const char* what);

/// Checks Hermiticity, unit trace and positivity (smallest eigenvalue
/// >= -psd_tol). Throws std::invalid_argument naming `what` otherwise.
void require_density_matrix(const ComplexMatrix& rho, const char* what,
                            double tol = 1e-10, double psd_tol = 1e-10);

/// Smallest eigenvalue of the Hermitian part of `m`.
double min_eigenvalue(const ComplexMatrix& m);

}  // namespace tunnelcat
