#include "tunnelcat/closedform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tunnelcat::closedform {

double single_particle_prob(double gamma, double delta, double t) {
  const double w2 = gamma * gamma + delta * delta;
  if (w2 == 0.0) {
    throw std::invalid_argument("single_particle_prob: gamma and delta are both zero");
  }
  const double s = std::sin(std::sqrt(w2) * t);
  return gamma * gamma / w2 * s * s;
}

double omega_k(const SimpleLimitParams& p, int k) {
  const double detuning = p.delta - p.alpha * (p.n_ancilla - 2.0 * k) / 2.0;
  return std::sqrt(detuning * detuning + p.gamma * p.gamma);
}

double coupled_prob(const SimpleLimitParams& p, double t) {
  if (static_cast<int>(p.amplitudes.size()) != p.n_ancilla + 1) {
    std::ostringstream msg;
    msg << "coupled_prob: expected " << p.n_ancilla + 1 << " amplitudes, got "
        << p.amplitudes.size();
    throw std::invalid_argument(msg.str());
  }
  double norm = 0.0;
  for (const Complex& a : p.amplitudes) norm += std::norm(a);
  if (std::abs(norm - 1.0) > 1e-10) {
    throw std::invalid_argument("coupled_prob: ancilla amplitudes are not normalized");
  }
  if (p.gamma == 0.0) return 0.0;

  double total = 0.0;
  for (int k = 0; k <= p.n_ancilla; ++k) {
    const double weight = std::norm(p.amplitudes[k]);
    if (weight == 0.0) continue;
    const double w = omega_k(p, k);
    const double s = std::sin(w * t);
    total += weight * p.gamma * p.gamma / (w * w) * s * s;
  }
  return total;
}

std::optional<int> optimal_k_star(double delta, double alpha, int n) {
  if (alpha == 0.0) throw std::invalid_argument("optimal_k_star: alpha must be nonzero");
  const double k = n / 2.0 - delta / alpha;
  const double rounded = std::round(k);
  if (std::abs(k - rounded) > 1e-9 || rounded < 0.0 || rounded > n) return std::nullopt;
  return static_cast<int>(rounded);
}

double maximizing_time(double omega, int l) {
  if (!(omega > 0.0)) throw std::invalid_argument("maximizing_time: omega must be > 0");
  return std::numbers::pi / (2.0 * omega) + l * std::numbers::pi / omega;
}

JConventionParams to_j_convention(double gamma_sigma, double delta_sigma, double alpha_sigma) {
  return {2.0 * gamma_sigma, 2.0 * delta_sigma, 2.0 * alpha_sigma};
}

}  // namespace tunnelcat::closedform
