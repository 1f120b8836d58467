#pragma once

#include <Eigen/Dense>

#include "tunnelcat/fock.hpp"
#include "tunnelcat/types.hpp"

namespace tunnelcat {

/// Parameters of one two-mode Bose-Hubbard well: H = eta Jz^2 - gamma Jx - delta Jz.
struct WellParams {
  double eta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  int n = 1;
};

/// System-ancilla coupling, H_int = sum_ij alpha_ij J_i (x) J_j with i, j in
/// {x, y, z}. The scalar form is the (z, z) density-density coupling.
class Coupling {
 public:
  Coupling() : alpha_(Eigen::Matrix3d::Zero()) {}

  static Coupling scalar(double alpha);
  static Coupling matrix(const Eigen::Matrix3d& alpha);

  bool is_scalar() const { return scalar_; }
  /// The (z, z) entry; equals the scalar alpha in scalar form.
  double alpha() const { return alpha_(2, 2); }
  const Eigen::Matrix3d& coefficients() const { return alpha_; }

 private:
  Eigen::Matrix3d alpha_;
  bool scalar_ = true;
};

ComplexMatrix build_well_h(const WellParams& p, const FockSpace& space);

ComplexMatrix build_interaction(const Coupling& c, const FockSpace& s, const FockSpace& a);

/// H_S (x) Id_A + Id_S (x) H_A + H_int.
ComplexMatrix build_joint_h(const ComplexMatrix& hs, const ComplexMatrix& ha,
                            const ComplexMatrix& hint);

}  // namespace tunnelcat
