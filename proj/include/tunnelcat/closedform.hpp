#pragma once

#include <optional>
#include <vector>

#include "tunnelcat/types.hpp"

// Analytic tunneling probabilities. Unlike the simulator, which builds
// Hamiltonians from angular-momentum operators J = sigma/2, everything here
// uses the Pauli form H_S = -delta sigma_z - gamma sigma_x with coupling
// alpha sigma_z (x) J_z. At one system boson the two are related by
// gamma_J = 2 gamma, delta_J = 2 delta, alpha_J = 2 alpha (see to_j_convention).

namespace tunnelcat::closedform {

/// (gamma^2 / omega^2) sin^2(omega t), omega = sqrt(delta^2 + gamma^2).
double single_particle_prob(double gamma, double delta, double t);

/// One system boson coupled to N non-tunneling, non-interacting ancilla
/// bosons with the same tilt, ancilla in the pure state sum_k a_k |k>.
struct SimpleLimitParams {
  double gamma = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  int n_ancilla = 1;
  std::vector<Complex> amplitudes;  // <k|psi_A>, k = 0..n_ancilla
};

/// Detuned frequency seen by the system when the ancilla sits in |k>.
double omega_k(const SimpleLimitParams& p, int k);

double coupled_prob(const SimpleLimitParams& p, double t);

/// k* = N/2 - delta/alpha when it is an integer in [0, N] (within 1e-9).
std::optional<int> optimal_k_star(double delta, double alpha, int n);

/// Times t = pi/(2 omega) + l pi/omega at which sin^2(omega t) = 1.
double maximizing_time(double omega, int l = 0);

struct JConventionParams {
  double gamma;
  double delta;
  double alpha;
};

JConventionParams to_j_convention(double gamma_sigma, double delta_sigma, double alpha_sigma);

}  // namespace tunnelcat::closedform
