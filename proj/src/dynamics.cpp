#include "tunnelcat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tunnelcat/fock.hpp"

namespace tunnelcat {

EigenSystem hermitian_eig(const ComplexMatrix& h) {
  require_square(h, "hermitian_eig");
  const double scale = std::max(1.0, max_abs(h));
  if (!is_hermitian(h, 1e-10 * scale)) {
    throw std::invalid_argument("hermitian_eig: input is not Hermitian");
  }
  const ComplexMatrix herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("hermitian_eig: eigensolver failed to converge");
  }
  EigenSystem out{solver.eigenvalues(), solver.eigenvectors()};

  // Fix the phase of every eigenvector so its largest-magnitude entry (first
  // one on ties) is real positive. Eigenvalues already come out ascending.
  for (Eigen::Index c = 0; c < out.eigenvectors.cols(); ++c) {
    auto col = out.eigenvectors.col(c);
    Eigen::Index pivot = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      const double mag = std::abs(col(r));
      if (mag > best + 1e-12) {
        best = mag;
        pivot = r;
      }
    }
    col *= std::conj(col(pivot)) / std::abs(col(pivot));
  }
  return out;
}

UnitaryPropagator::UnitaryPropagator(const ComplexMatrix& h) : eig_(hermitian_eig(h)) {}

ComplexMatrix UnitaryPropagator::unitary(double t) const {
  const Eigen::VectorXcd phases =
      (eig_.eigenvalues.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
  return eig_.eigenvectors * phases.asDiagonal() * eig_.eigenvectors.adjoint();
}

ComplexMatrix UnitaryPropagator::evolve(const ComplexMatrix& rho, double t) const {
  const ComplexMatrix u = unitary(t);
  return u * rho * u.adjoint();
}

ComplexMatrix propagate(const ComplexMatrix& rho0, const ComplexMatrix& h, double t) {
  require_density_matrix(rho0, "propagate");
  if (rho0.rows() != h.rows()) {
    throw std::invalid_argument("propagate: state and Hamiltonian dimensions differ");
  }
  if (t == 0.0) return rho0;
  return UnitaryPropagator(h).evolve(rho0, t);
}

ReducedDynamics::ReducedDynamics(const ComplexMatrix& rho_s0, const ComplexMatrix& rho_a0,
                                 const ComplexMatrix& h_sa)
    : dim_s_(static_cast<int>(rho_s0.rows())),
      dim_a_(static_cast<int>(rho_a0.rows())),
      propagator_(h_sa) {
  if (h_sa.rows() != rho_s0.rows() * rho_a0.rows()) {
    std::ostringstream msg;
    msg << "ReducedDynamics: joint Hamiltonian is " << h_sa.rows() << "x" << h_sa.cols()
        << " but states have dims " << dim_s_ << " and " << dim_a_;
    throw std::invalid_argument(msg.str());
  }
  const ComplexMatrix& v = propagator_.eigensystem().eigenvectors;
  rho0_eig_ = v.adjoint() * kron(rho_s0, rho_a0) * v;
}

ComplexMatrix ReducedDynamics::system_state(double t) const {
  const EigenSystem& eig = propagator_.eigensystem();
  const Eigen::Index n = eig.eigenvalues.size();
  // In the eigenbasis the evolution is an entrywise phase rotation.
  ComplexMatrix rotated(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double phase = -(eig.eigenvalues(i) - eig.eigenvalues(j)) * t;
      rotated(i, j) = rho0_eig_(i, j) * Complex(std::cos(phase), std::sin(phase));
    }
  }
  const ComplexMatrix joint = eig.eigenvectors * rotated * eig.eigenvectors.adjoint();
  return partial_trace_ancilla(joint, dim_s_, dim_a_);
}

double ReducedDynamics::probability(double t, int k_target) const {
  return transfer_probability(system_state(t), k_target);
}

ComplexMatrix reduced_system_state(const ComplexMatrix& rho_s0, const ComplexMatrix& rho_a0,
                                   const ComplexMatrix& h_sa, double t, int dim_s, int dim_a) {
  if (rho_s0.rows() != dim_s || rho_a0.rows() != dim_a) {
    throw std::invalid_argument("reduced_system_state: state dimensions do not match dim_s/dim_a");
  }
  require_density_matrix(rho_s0, "reduced_system_state(rho_s0)");
  require_density_matrix(rho_a0, "reduced_system_state(rho_a0)");
  if (t == 0.0) return rho_s0;
  return ReducedDynamics(rho_s0, rho_a0, h_sa).system_state(t);
}

double transfer_probability(const ComplexMatrix& rho_s, int k_target) {
  require_square(rho_s, "transfer_probability");
  if (k_target < 0 || k_target >= rho_s.rows()) {
    std::ostringstream msg;
    msg << "transfer_probability: k_target=" << k_target << " outside [0, " << rho_s.rows() - 1
        << "]";
    throw std::out_of_range(msg.str());
  }
  const double p = rho_s(k_target, k_target).real();
  if (!std::isfinite(p) || p < -1e-12 || p > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "transfer_probability: population " << p << " outside [0, 1]";
    throw NumericalError(msg.str());
  }
  return std::clamp(p, 0.0, 1.0);
}

namespace {

// Maximizes f on [lo, hi] to the given tolerance in the argument.
double golden_section_argmax(const std::function<double(double)>& f, double lo, double hi,
                             double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

MaxProbability find_max_probability(const std::function<double(double)>& probability,
                                    double window_T, int grid_points) {
  if (!(window_T > 0.0)) throw std::invalid_argument("find_max_probability: window must be > 0");
  if (grid_points < 100) {
    throw std::invalid_argument("find_max_probability: need at least 100 grid points");
  }
  const double step = window_T / (grid_points - 1);
  std::vector<double> values(grid_points);
  double grid_max = -1.0;
  for (int i = 0; i < grid_points; ++i) {
    values[i] = probability(i * step);
    grid_max = std::max(grid_max, values[i]);
  }
  double grid_min = grid_max;
  for (double v : values) grid_min = std::min(grid_min, v);

  // Grid samples can miss a peak by O(step^2), far more than the 1e-9 tie
  // tolerance, so every near-top local maximum is refined before the
  // earliest-time tie-break is applied.
  const double candidate_floor = grid_max - std::max(1e-9, 1e-3 * (grid_max - grid_min));
  std::vector<MaxProbability> refined;
  for (int i = 0; i < grid_points; ++i) {
    const bool rises = i == 0 || values[i] > values[i - 1];
    const bool holds = i == grid_points - 1 || values[i] >= values[i + 1];
    if (!rises || !holds || values[i] < candidate_floor) continue;
    MaxProbability c{i * step, values[i]};
    const double lo = std::max(0.0, (i - 1) * step);
    const double hi = std::min(window_T, (i + 1) * step);
    const double t_refined = golden_section_argmax(probability, lo, hi, 1e-6);
    // Keep the grid point unless refinement strictly improves on it, so flat
    // curves report the earliest time.
    if (const double p = probability(t_refined); p > c.p_star + 1e-12) c = {t_refined, p};
    refined.push_back(c);
  }
  double best = -1.0;
  for (const MaxProbability& c : refined) best = std::max(best, c.p_star);
  MaxProbability out = refined.front();
  for (const MaxProbability& c : refined) {
    if (c.p_star >= best - 1e-9) {
      out = c;
      break;
    }
  }
  return out;
}

}  // namespace tunnelcat
