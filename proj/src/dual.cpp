#include "tunnelcat/dual.hpp"

#include <algorithm>

namespace tunnelcat {

namespace {

double one_norm(const ComplexMatrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

DualMatrix expm_minus_i(const DualMatrix& h, DualReal t) {
  // A = -i t H, differentiated through both factors.
  DualMatrix a{Complex(0.0, -t.v) * h.value,
               Complex(0.0, -t.d) * h.value + Complex(0.0, -t.v) * h.tangent};

  const double norm = one_norm(a.value);
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const double scale = std::ldexp(1.0, -squarings);
  a = scale * a;

  const Eigen::Index n = h.value.rows();
  DualMatrix result = DualMatrix::constant(ComplexMatrix::Identity(n, n));
  DualMatrix term = result;
  for (int k = 1; k <= 40; ++k) {
    term = (1.0 / k) * (term * a);
    result += term;
    if (one_norm(term.value) < 1e-18 && one_norm(term.tangent) < 1e-18 * std::max(1.0, one_norm(result.tangent))) {
      break;
    }
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

}  // namespace tunnelcat
