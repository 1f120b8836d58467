#pragma once

#include <vector>

#include "tunnelcat/types.hpp"

namespace tunnelcat {

/// J_z dephasing strengths on the system and on the ancilla.
struct NoiseParams {
  double lambda_s = 0.0;
  double lambda_a = 0.0;
};

/// Dimensions of a system (x) ancilla space. dim_a = 1 is the system-only case.
struct JointDims {
  int dim_s = 2;
  int dim_a = 1;
  int dim() const { return dim_s * dim_a; }
};

enum class GateKind { hard, smooth };

/// Multiplicative time gate on Runge-Kutta updates: step j is weighted by
/// gate(t_hat - j dt). The hard gate is a Heaviside step (1 at zero); the
/// smooth gate is a logistic sigmoid with the given temperature.
struct GateSpec {
  double t_hat = 0.0;
  GateKind kind = GateKind::hard;
  double temperature = 0.01;

  double weight(double step_time) const;
};

/// Once past t_hat, a smooth gate below this weight ends the integration.
inline constexpr double kSmoothGateCutoff = 1e-17;

/// Right-hand side of the GKSL equation
///   d rho/dt = -i[H, rho] + sum_X lambda_X (L_X rho L_X - {L_X^2, rho}/2)
/// with L_S = J_z (x) I and L_A = I (x) J_z. Both dissipators are diagonal
/// in the number basis, so they act entrywise: rho_ij decays at rate
/// sum_X lambda_X (l_X,i - l_X,j)^2 / 2.
class GkslGenerator {
 public:
  GkslGenerator(ComplexMatrix h, const NoiseParams& noise, const JointDims& dims);

  ComplexMatrix operator()(const ComplexMatrix& rho) const;

  const ComplexMatrix& hamiltonian() const { return h_; }
  /// Entrywise dephasing multipliers (nonpositive, zero on the diagonal).
  const Eigen::MatrixXd& dephasing() const { return rates_; }
  const JointDims& dims() const { return dims_; }

 private:
  ComplexMatrix h_;
  Eigen::MatrixXd rates_;
  JointDims dims_;
};

/// Entrywise multipliers -(lambda_s/2)(ls_i - ls_j)^2 - (lambda_a/2)(la_i - la_j)^2.
Eigen::MatrixXd dephasing_rates(const NoiseParams& noise, const JointDims& dims);

ComplexMatrix gksl_rhs(const ComplexMatrix& rho, const ComplexMatrix& h, const NoiseParams& noise,
                       const JointDims& dims);

/// Classic fourth-order Runge-Kutta step for d rho/dt = rhs(rho).
template <class State, class Rhs>
State rk4_step(const State& rho, double dt, Rhs&& rhs) {
  const State k1 = rhs(rho);
  const State k2 = rhs(rho + (0.5 * dt) * k1);
  const State k3 = rhs(rho + (0.5 * dt) * k2);
  const State k4 = rhs(rho + dt * k3);
  return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct TrajectorySample {
  double t;
  ComplexMatrix rho;
};

/// Integrates the GKSL equation over [0, horizon_T] with step dt, gating each
/// update by `gate`. Samples are taken at step 0, every `sample_every` steps,
/// and at the final step. Throws NumericalError when the trace drifts by more
/// than 1e-4, or when a sample has trace error above 1e-6 or an eigenvalue
/// below -1e-6.
std::vector<TrajectorySample> evolve_noisy(const ComplexMatrix& rho0, const ComplexMatrix& h,
                                           const NoiseParams& noise, const JointDims& dims,
                                           const GateSpec& gate, double horizon_T, double dt,
                                           int sample_every);

/// Final state only; checks trace drift but skips per-sample eigenvalues.
ComplexMatrix evolve_noisy_final(const ComplexMatrix& rho0, const GkslGenerator& generator,
                                 const GateSpec& gate, double horizon_T, double dt);

/// Number of steps covering [0, horizon_T] at step dt.
long step_count(double horizon_T, double dt);

/// Completely mixed state I/(n+1) of an n-boson well.
ComplexMatrix stationary_mix(int n);

}  // namespace tunnelcat
