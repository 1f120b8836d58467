#include "tunnelcat/lindblad.hpp"

#include <cmath>
#include <sstream>

#include "tunnelcat/fock.hpp"

namespace tunnelcat {

double GateSpec::weight(double step_time) const {
  const double x = t_hat - step_time;
  if (kind == GateKind::hard) return x >= 0.0 ? 1.0 : 0.0;
  return 1.0 / (1.0 + std::exp(-x / temperature));
}

Eigen::MatrixXd dephasing_rates(const NoiseParams& noise, const JointDims& dims) {
  if (noise.lambda_s < 0.0 || noise.lambda_a < 0.0) {
    throw std::invalid_argument("dephasing_rates: noise strengths must be nonnegative");
  }
  const RealVector zs = jz_diagonal(dims.dim_s);
  const RealVector za = jz_diagonal(dims.dim_a);
  const int n = dims.dim();
  Eigen::MatrixXd rates(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double ds = zs(i / dims.dim_a) - zs(j / dims.dim_a);
      const double da = za(i % dims.dim_a) - za(j % dims.dim_a);
      rates(i, j) = -0.5 * (noise.lambda_s * ds * ds + noise.lambda_a * da * da);
    }
  }
  return rates;
}

GkslGenerator::GkslGenerator(ComplexMatrix h, const NoiseParams& noise, const JointDims& dims)
    : h_(std::move(h)), rates_(dephasing_rates(noise, dims)), dims_(dims) {
  if (h_.rows() != dims.dim() || h_.cols() != dims.dim()) {
    std::ostringstream msg;
    msg << "GkslGenerator: Hamiltonian is " << h_.rows() << "x" << h_.cols() << ", expected "
        << dims.dim();
    throw std::invalid_argument(msg.str());
  }
}

ComplexMatrix GkslGenerator::operator()(const ComplexMatrix& rho) const {
  ComplexMatrix out = h_ * rho;
  out.noalias() -= rho * h_;
  out *= Complex(0.0, -1.0);
  out.array() += rates_.array().cast<Complex>() * rho.array();
  return out;
}

ComplexMatrix gksl_rhs(const ComplexMatrix& rho, const ComplexMatrix& h, const NoiseParams& noise,
                       const JointDims& dims) {
  if (rho.rows() != dims.dim() || rho.cols() != dims.dim()) {
    throw std::invalid_argument("gksl_rhs: state dimension does not match dims");
  }
  if (!is_hermitian(rho, 1e-10 * std::max(1.0, max_abs(rho)))) {
    throw std::invalid_argument("gksl_rhs: state is not Hermitian");
  }
  return GkslGenerator(h, noise, dims)(rho);
}

long step_count(double horizon_T, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_count: dt must be > 0");
  if (horizon_T < 0.0) throw std::invalid_argument("step_count: horizon must be >= 0");
  return std::lround(horizon_T / dt);
}

namespace {

void check_trace(const ComplexMatrix& rho, long step, double dt) {
  const double drift = std::abs(rho.trace().real() - 1.0);
  if (!(drift <= 1e-4)) {
    std::ostringstream msg;
    msg << "integrator instability at t=" << step * dt << ": trace drifted by " << drift
        << "; use a smaller dt (currently " << dt << ")";
    throw NumericalError(msg.str());
  }
}

void check_sample(const ComplexMatrix& rho, double t) {
  const double drift = std::abs(rho.trace().real() - 1.0);
  const double lo = min_eigenvalue(rho);
  if (drift > 1e-6 || lo < -1e-6) {
    std::ostringstream msg;
    msg << "integrator failure at t=" << t << ": trace error " << drift << ", min eigenvalue "
        << lo << "; use a smaller dt";
    throw NumericalError(msg.str());
  }
}

}  // namespace

std::vector<TrajectorySample> evolve_noisy(const ComplexMatrix& rho0, const ComplexMatrix& h,
                                           const NoiseParams& noise, const JointDims& dims,
                                           const GateSpec& gate, double horizon_T, double dt,
                                           int sample_every) {
  if (sample_every < 1) throw std::invalid_argument("evolve_noisy: sample_every must be >= 1");
  if (rho0.rows() != dims.dim()) {
    throw std::invalid_argument("evolve_noisy: state dimension does not match dims");
  }
  const GkslGenerator generator(h, noise, dims);
  const long steps = step_count(horizon_T, dt);

  std::vector<TrajectorySample> samples;
  samples.reserve(static_cast<std::size_t>(steps / sample_every + 2));
  ComplexMatrix rho = rho0;
  samples.push_back({0.0, rho});
  bool frozen = false;
  for (long j = 1; j <= steps; ++j) {
    if (!frozen) {
      const double w = gate.weight(j * dt);
      if (gate.kind == GateKind::hard && w == 0.0) {
        frozen = true;
      } else {
        const ComplexMatrix next = rk4_step(rho, dt, generator);
        rho += w * (next - rho);
        check_trace(rho, j, dt);
      }
    }
    if (j % sample_every == 0 || j == steps) {
      check_sample(rho, j * dt);
      samples.push_back({j * dt, rho});
    }
  }
  return samples;
}

ComplexMatrix evolve_noisy_final(const ComplexMatrix& rho0, const GkslGenerator& generator,
                                 const GateSpec& gate, double horizon_T, double dt) {
  const long steps = step_count(horizon_T, dt);
  ComplexMatrix rho = rho0;
  for (long j = 1; j <= steps; ++j) {
    const double w = gate.weight(j * dt);
    if (gate.kind == GateKind::hard && w == 0.0) break;
    if (gate.kind == GateKind::smooth && w < kSmoothGateCutoff && j * dt > gate.t_hat) break;
    const ComplexMatrix next = rk4_step(rho, dt, generator);
    rho += w * (next - rho);
    if (j % 64 == 0) check_trace(rho, j, dt);
  }
  check_trace(rho, steps, dt);
  return rho;
}

ComplexMatrix stationary_mix(int n) {
  if (n < 1) throw std::invalid_argument("stationary_mix: particle count must be >= 1");
  return ComplexMatrix::Identity(n + 1, n + 1) / static_cast<double>(n + 1);
}

}  // namespace tunnelcat
