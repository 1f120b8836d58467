#pragma once

#include <functional>

#include "tunnelcat/types.hpp"

namespace tunnelcat {

/// Spectral decomposition H = V diag(eigenvalues) V^dag.
struct EigenSystem {
  RealVector eigenvalues;     // ascending
  ComplexMatrix eigenvectors; // columns; each column's largest entry is real positive
};

/// Throws std::invalid_argument for non-Hermitian input and NumericalError if
/// the solver does not converge.
EigenSystem hermitian_eig(const ComplexMatrix& h);

/// exp(-i H t) built from one diagonalization, reusable across many times.
class UnitaryPropagator {
 public:
  explicit UnitaryPropagator(const ComplexMatrix& h);

  ComplexMatrix unitary(double t) const;
  /// U(t) rho U(t)^dag.
  ComplexMatrix evolve(const ComplexMatrix& rho, double t) const;

  const EigenSystem& eigensystem() const { return eig_; }
  Eigen::Index dim() const { return eig_.eigenvalues.size(); }

 private:
  EigenSystem eig_;
};

/// exp(-iHt) rho0 exp(iHt) with hbar = 1; negative t runs the evolution backwards.
ComplexMatrix propagate(const ComplexMatrix& rho0, const ComplexMatrix& h, double t);

/// Reduced system state Tr_A[U (rho_s0 (x) rho_a0) U^dag] for a fixed joint
/// Hamiltonian, evaluated at arbitrary times.
class ReducedDynamics {
 public:
  ReducedDynamics(const ComplexMatrix& rho_s0, const ComplexMatrix& rho_a0,
                  const ComplexMatrix& h_sa);

  ComplexMatrix system_state(double t) const;
  /// Population of basis state |k_target> at time t.
  double probability(double t, int k_target = 0) const;

  int dim_s() const { return dim_s_; }
  int dim_a() const { return dim_a_; }

 private:
  int dim_s_, dim_a_;
  UnitaryPropagator propagator_;
  ComplexMatrix rho0_eig_;  // initial joint state in the eigenbasis of H
};

ComplexMatrix reduced_system_state(const ComplexMatrix& rho_s0, const ComplexMatrix& rho_a0,
                                   const ComplexMatrix& h_sa, double t, int dim_s, int dim_a);

/// <k_target| rho_s |k_target>, clamped to [0, 1]. Values below -1e-12 or
/// above 1 + 1e-12 indicate a broken density matrix and raise NumericalError.
double transfer_probability(const ComplexMatrix& rho_s, int k_target);

struct MaxProbability {
  double t_star = 0.0;
  double p_star = 0.0;
};

/// Earliest global maximizer of P(t) over [0, window_T]. A uniform grid scan
/// finds the local maxima near the top; each is refined by golden-section
/// search (tolerance 1e-6 in t) within its neighbouring grid cells, and the
/// earliest refined maximum within 1e-9 of the best one is returned.
MaxProbability find_max_probability(const std::function<double(double)>& probability,
                                    double window_T, int grid_points = 4000);

}  // namespace tunnelcat
