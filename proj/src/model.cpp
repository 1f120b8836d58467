#include "tunnelcat/model.hpp"

#include <sstream>

namespace tunnelcat {

Coupling Coupling::scalar(double alpha) {
  Coupling c;
  c.alpha_(2, 2) = alpha;
  c.scalar_ = true;
  return c;
}

Coupling Coupling::matrix(const Eigen::Matrix3d& alpha) {
  Coupling c;
  c.alpha_ = alpha;
  c.scalar_ = false;
  return c;
}

ComplexMatrix build_well_h(const WellParams& p, const FockSpace& space) {
  if (p.n != space.n_particles()) {
    std::ostringstream msg;
    msg << "build_well_h: parameters are for " << p.n << " bosons but the space holds "
        << space.n_particles();
    throw std::invalid_argument(msg.str());
  }
  const ComplexMatrix& jz = space.jz();
  return p.eta * (jz * jz) - p.gamma * space.jx() - p.delta * jz;
}

ComplexMatrix build_interaction(const Coupling& c, const FockSpace& s, const FockSpace& a) {
  const int dim = s.dim() * a.dim();
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  const Eigen::Matrix3d& alpha = c.coefficients();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (alpha(i, j) != 0.0) h += alpha(i, j) * kron(s.j(i), a.j(j));
    }
  }
  return h;
}

ComplexMatrix build_joint_h(const ComplexMatrix& hs, const ComplexMatrix& ha,
                            const ComplexMatrix& hint) {
  require_square(hs, "build_joint_h(hs)");
  require_square(ha, "build_joint_h(ha)");
  const Eigen::Index dim = hs.rows() * ha.rows();
  if (hint.rows() != dim || hint.cols() != dim) {
    std::ostringstream msg;
    msg << "build_joint_h: interaction is " << hint.rows() << "x" << hint.cols()
        << ", expected " << dim << "x" << dim;
    throw std::invalid_argument(msg.str());
  }
  return kron(hs, ComplexMatrix::Identity(ha.rows(), ha.rows())) +
         kron(ComplexMatrix::Identity(hs.rows(), hs.rows()), ha) + hint;
}

}  // namespace tunnelcat
