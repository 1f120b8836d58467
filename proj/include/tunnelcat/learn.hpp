#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tunnelcat/fock.hpp"
#include "tunnelcat/lindblad.hpp"
#include "tunnelcat/model.hpp"
#include "tunnelcat/types.hpp"

namespace tunnelcat {

/// How the learnable ancilla state is parameterized.
///  - factor:   rho_A = B B^dag / tr(B B^dag), B complex (N_A+1)x(N_A+1)
///  - diagonal: rho_A = diag(w o w) / sum w^2, w real of length N_A+1
enum class AncillaMode { factor, diagonal };

enum class GradientEngine { finite_diff, forward_dual };

/// Parameter groups that can be frozen as a whole.
enum class ParamGroup { eta_a, gamma_a, delta_a, alpha, t_hat, ancilla };

/// Learnable parameters, flattened in a fixed order:
///   [eta_a, gamma_a, delta_a, alpha (1 or 9, row-major xyz), t_raw, ancilla...]
/// where t_hat = softplus(t_raw) and the ancilla block is either the real and
/// imaginary parts of B (row-major, interleaved) or w.
class LearnVector {
 public:
  LearnVector(int n_ancilla, AncillaMode mode, bool full_coupling = false);

  int n_ancilla() const { return n_ancilla_; }
  int ancilla_dim() const { return n_ancilla_ + 1; }
  AncillaMode mode() const { return mode_; }
  bool full_coupling() const { return full_coupling_; }

  double eta_a = 1.0;
  double gamma_a = 1.0;
  double delta_a = 1.0;

  Coupling coupling() const;
  void set_coupling(const Coupling& c);
  /// (z, z) coupling entry.
  double alpha() const { return full_coupling_ ? alpha_[8] : alpha_[0]; }

  double t_hat() const;
  void set_t_hat(double t);
  double t_raw() const { return t_raw_; }

  const ComplexMatrix& factor() const { return factor_; }
  const RealVector& weights() const { return weights_; }
  void set_factor(const ComplexMatrix& b);
  void set_weights(const RealVector& w);
  /// Sets the factor so the realized state is |psi><psi|. Diagonal mode
  /// keeps only the populations |psi_k|^2.
  void set_pure_ancilla(const Eigen::VectorXcd& psi);

  std::size_t size() const;
  RealVector flatten() const;
  void unflatten(const RealVector& x);

  void freeze(ParamGroup group, bool frozen = true);
  bool is_frozen(std::size_t index) const { return frozen_[index] != 0; }
  const std::vector<char>& frozen_mask() const { return frozen_; }

  /// First flat index and length of each group.
  std::pair<std::size_t, std::size_t> group_range(ParamGroup group) const;

 private:
  int n_ancilla_;
  AncillaMode mode_;
  bool full_coupling_;
  std::vector<double> alpha_;
  double t_raw_;
  ComplexMatrix factor_;
  RealVector weights_;
  std::vector<char> frozen_;
};

/// Valid density matrix realized from the ancilla parameters. Throws
/// NumericalError for an all-zero factor.
ComplexMatrix realize_ancilla(const LearnVector& v);

/// Re-projects the ancilla onto real diagonal states with unit trace:
/// rho_A <- real(diag(rho_A)) / tr.
void project_ancilla_diagonal(LearnVector& v);

/// Random complex Gaussian factor (the realized state is a random density
/// matrix) or random weights in [0, 1).
ComplexMatrix random_factor(int dim, std::mt19937_64& rng);
RealVector random_weights(int dim, std::mt19937_64& rng);

struct ObjectiveSpec {
  WellParams system{1.0, 0.5, 1.0, 1};
  int n_ancilla = 1;
  bool noisy = false;
  NoiseParams noise;
  double horizon_T = 20.0;       // noisy mode: integration window
  double dt = 0.05;              // noisy mode: training step
  double gate_temperature = 0.0; // smooth gate; 0 means "use dt"
  int k_target = 0;
};

/// L = 1 - P_{L->R}(t_hat) for the system started all-left and the ancilla in
/// the learned state. Noiseless mode propagates exactly; noisy mode runs the
/// gated Runge-Kutta GKSL integrator with a smooth gate at t_hat.
class TunnelingObjective {
 public:
  explicit TunnelingObjective(ObjectiveSpec spec);

  const ObjectiveSpec& spec() const { return spec_; }
  const FockSpace& system_space() const { return fs_; }
  const FockSpace& ancilla_space() const { return fa_; }
  const ComplexMatrix& system_h() const { return hs_; }
  const ComplexMatrix& system_initial_state() const { return rho_s0_; }

  ComplexMatrix ancilla_h(const LearnVector& v) const;
  ComplexMatrix joint_h(const LearnVector& v) const;

  double loss(const LearnVector& v) const;

  /// Probability at t_hat. With `evaluation` set, noisy mode uses the hard
  /// gate at step `eval_dt` instead of the smooth training gate.
  double probability(const LearnVector& v, bool evaluation = false, double eval_dt = 0.01) const;

  /// d loss / d x over the flattened parameters; frozen entries are zero.
  /// Throws NumericalError on a non-finite component.
  RealVector gradient(const LearnVector& v, GradientEngine engine) const;

 private:
  RealVector gradient_finite_diff(const LearnVector& v) const;
  RealVector gradient_forward_dual(const LearnVector& v) const;
  double dual_loss_derivative(const LearnVector& v, std::size_t index) const;

  ObjectiveSpec spec_;
  FockSpace fs_, fa_;
  ComplexMatrix hs_, rho_s0_;
  ComplexMatrix hs_joint_;             // H_S (x) I
  ComplexMatrix jz2_a_, jx_a_, jz_a_;  // embedded ancilla operators, I (x) J
  std::vector<ComplexMatrix> coupling_ops_;  // J_i (x) J_j, row-major
};

struct AdamState {
  RealVector m;
  RealVector v;
  long step = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(std::size_t n, double lr = 0.01);
};

std::pair<AdamState, RealVector> adam_step(AdamState a, const RealVector& x, const RealVector& g);
std::pair<AdamState, LearnVector> adam_step(const AdamState& a, const LearnVector& v,
                                            const RealVector& g);

/// max(|eta_a|, |gamma_a|, |delta_a|, max |alpha_ij|).
double normalization_divisor(const LearnVector& v);

/// Joint Hamiltonian divided by normalization_divisor(v), for post-training
/// evaluation only. Throws std::invalid_argument if all four parameters vanish.
ComplexMatrix normalize_hamiltonian(const TunnelingObjective& parts, const LearnVector& v);

struct TrainSettings {
  ObjectiveSpec objective;
  LearnVector initial{1, AncillaMode::factor};
  double lr = 0.01;
  int max_iters = 2000;
  GradientEngine engine = GradientEngine::finite_diff;
  bool project_diagonal = false;
  double early_stop_tol = 1e-9;
  int early_stop_window = 100;
  double eval_dt = 0.01;
  double window_T = 0.0;  // evaluation window recorded in the report; 0 means 2 t_hat
};

struct ParamSnapshot {
  double eta_a, gamma_a, delta_a, alpha, t_hat, trace_rho_a;
};

struct TrainReport {
  std::vector<double> losses;
  std::vector<ParamSnapshot> snapshots;
  LearnVector final_vector{1, AncillaMode::factor};
  ComplexMatrix rho_a;
  double t_star = 0.0;
  double p_star = 0.0;
  bool converged = false;
  int iterations = 0;
  double wall_seconds = 0.0;
  double window_T = 0.0;
  double normalization_divisor = 1.0;
  double normalized_t_star = 0.0;
};

TrainReport train(const TrainSettings& settings);

std::string to_string(GradientEngine e);
std::string to_string(AncillaMode m);

}  // namespace tunnelcat
