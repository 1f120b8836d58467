#include "tunnelcat/learn.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "tunnelcat/dual.hpp"
#include "tunnelcat/dynamics.hpp"

namespace tunnelcat {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("t_hat must be > 0");
  // log(exp(y) - 1), written to stay finite for large and tiny y.
  return y + std::log(-std::expm1(-y));
}

// Population of |k> with a looser tolerance than transfer_probability, since
// Runge-Kutta states are only positive to integrator accuracy.
double population(const ComplexMatrix& rho_s, int k) {
  const double p = rho_s(k, k).real();
  if (!std::isfinite(p) || p < -1e-6 || p > 1.0 + 1e-6) {
    std::ostringstream msg;
    msg << "population of |" << k << "> is " << p;
    throw NumericalError(msg.str());
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// LearnVector

LearnVector::LearnVector(int n_ancilla, AncillaMode mode, bool full_coupling)
    : n_ancilla_(n_ancilla),
      mode_(mode),
      full_coupling_(full_coupling),
      alpha_(full_coupling ? 9 : 1, 1.0),
      t_raw_(softplus_inverse(1.0)) {
  if (n_ancilla < 1) throw std::invalid_argument("LearnVector: ancilla needs >= 1 boson");
  const int d = ancilla_dim();
  factor_ = ComplexMatrix::Identity(d, d);
  weights_ = RealVector::Ones(d);
  frozen_.assign(size(), 0);
}

Coupling LearnVector::coupling() const {
  if (!full_coupling_) return Coupling::scalar(alpha_[0]);
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = alpha_[i];
  return Coupling::matrix(m);
}

void LearnVector::set_coupling(const Coupling& c) {
  const Eigen::Matrix3d& m = c.coefficients();
  if (full_coupling_) {
    for (int i = 0; i < 9; ++i) alpha_[i] = m(i / 3, i % 3);
    return;
  }
  Eigen::Matrix3d off = m;
  off(2, 2) = 0.0;
  if (!off.isZero(0.0)) {
    throw std::invalid_argument("LearnVector: scalar coupling cannot hold non-(z,z) entries");
  }
  alpha_[0] = m(2, 2);
}

double LearnVector::t_hat() const { return softplus(t_raw_); }

void LearnVector::set_t_hat(double t) { t_raw_ = softplus_inverse(t); }

void LearnVector::set_factor(const ComplexMatrix& b) {
  if (b.rows() != ancilla_dim() || b.cols() != ancilla_dim()) {
    throw std::invalid_argument("LearnVector::set_factor: wrong factor shape");
  }
  factor_ = b;
}

void LearnVector::set_weights(const RealVector& w) {
  if (w.size() != ancilla_dim()) {
    throw std::invalid_argument("LearnVector::set_weights: wrong weight length");
  }
  weights_ = w;
}

void LearnVector::set_pure_ancilla(const Eigen::VectorXcd& psi) {
  if (psi.size() != ancilla_dim()) {
    throw std::invalid_argument("LearnVector::set_pure_ancilla: wrong state length");
  }
  const double norm = psi.norm();
  if (norm == 0.0) throw std::invalid_argument("LearnVector::set_pure_ancilla: zero state");
  const Eigen::VectorXcd u = psi / norm;
  factor_ = u * u.adjoint();
  weights_ = u.cwiseAbs();
}

std::size_t LearnVector::size() const {
  const std::size_t d = ancilla_dim();
  return 3 + alpha_.size() + 1 + (mode_ == AncillaMode::factor ? 2 * d * d : d);
}

std::pair<std::size_t, std::size_t> LearnVector::group_range(ParamGroup group) const {
  const std::size_t na = alpha_.size();
  switch (group) {
    case ParamGroup::eta_a: return {0, 1};
    case ParamGroup::gamma_a: return {1, 1};
    case ParamGroup::delta_a: return {2, 1};
    case ParamGroup::alpha: return {3, na};
    case ParamGroup::t_hat: return {3 + na, 1};
    case ParamGroup::ancilla: return {4 + na, size() - 4 - na};
  }
  throw std::logic_error("unknown parameter group");
}

RealVector LearnVector::flatten() const {
  RealVector x(static_cast<Eigen::Index>(size()));
  Eigen::Index i = 0;
  x(i++) = eta_a;
  x(i++) = gamma_a;
  x(i++) = delta_a;
  for (double a : alpha_) x(i++) = a;
  x(i++) = t_raw_;
  if (mode_ == AncillaMode::factor) {
    for (Eigen::Index r = 0; r < factor_.rows(); ++r) {
      for (Eigen::Index c = 0; c < factor_.cols(); ++c) {
        x(i++) = factor_(r, c).real();
        x(i++) = factor_(r, c).imag();
      }
    }
  } else {
    for (Eigen::Index k = 0; k < weights_.size(); ++k) x(i++) = weights_(k);
  }
  return x;
}

void LearnVector::unflatten(const RealVector& x) {
  if (static_cast<std::size_t>(x.size()) != size()) {
    throw std::invalid_argument("LearnVector::unflatten: length mismatch");
  }
  Eigen::Index i = 0;
  eta_a = x(i++);
  gamma_a = x(i++);
  delta_a = x(i++);
  for (double& a : alpha_) a = x(i++);
  t_raw_ = x(i++);
  if (mode_ == AncillaMode::factor) {
    for (Eigen::Index r = 0; r < factor_.rows(); ++r) {
      for (Eigen::Index c = 0; c < factor_.cols(); ++c) {
        factor_(r, c) = Complex(x(i), x(i + 1));
        i += 2;
      }
    }
  } else {
    for (Eigen::Index k = 0; k < weights_.size(); ++k) weights_(k) = x(i++);
  }
}

void LearnVector::freeze(ParamGroup group, bool frozen) {
  const auto [start, len] = group_range(group);
  for (std::size_t i = start; i < start + len; ++i) frozen_[i] = frozen ? 1 : 0;
}

ComplexMatrix realize_ancilla(const LearnVector& v) {
  if (v.mode() == AncillaMode::factor) {
    const ComplexMatrix m = v.factor() * v.factor().adjoint();
    const double tr = m.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
      throw NumericalError("realize_ancilla: degenerate ancilla factor (zero trace)");
    }
    return (0.5 / tr) * (m + m.adjoint());
  }
  const RealVector w2 = v.weights().cwiseAbs2();
  const double s = w2.sum();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw NumericalError("realize_ancilla: degenerate ancilla weights (all zero)");
  }
  return (w2 / s).cast<Complex>().asDiagonal();
}

void project_ancilla_diagonal(LearnVector& v) {
  if (v.mode() == AncillaMode::factor) {
    const RealVector p = realize_ancilla(v).diagonal().real().cwiseMax(0.0);
    v.set_factor(p.cwiseSqrt().cast<Complex>().asDiagonal());
    return;
  }
  const double norm = v.weights().norm();
  if (!(norm > 0.0)) throw NumericalError("project_ancilla_diagonal: all weights are zero");
  v.set_weights(v.weights() / norm);
}

ComplexMatrix random_factor(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix b(dim, dim);
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      const double re = normal(rng);
      const double im = normal(rng);
      b(r, c) = Complex(re, im);
    }
  }
  return b;
}

RealVector random_weights(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  RealVector w(dim);
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = uniform(rng);
  return w;
}

// ---------------------------------------------------------------------------
// TunnelingObjective

TunnelingObjective::TunnelingObjective(ObjectiveSpec spec)
    : spec_(std::move(spec)), fs_(spec_.system.n), fa_(spec_.n_ancilla) {
  if (spec_.k_target < 0 || spec_.k_target > spec_.system.n) {
    throw std::out_of_range("TunnelingObjective: k_target outside the system basis");
  }
  if (spec_.noisy && !(spec_.dt > 0.0 && spec_.horizon_T > 0.0)) {
    throw std::invalid_argument("TunnelingObjective: noisy mode needs dt > 0 and horizon > 0");
  }
  hs_ = build_well_h(spec_.system, fs_);
  rho_s0_ = localized_state(fs_, spec_.system.n);
  const ComplexMatrix is = ComplexMatrix::Identity(fs_.dim(), fs_.dim());
  const ComplexMatrix ia = ComplexMatrix::Identity(fa_.dim(), fa_.dim());
  hs_joint_ = kron(hs_, ia);
  jz2_a_ = kron(is, fa_.jz() * fa_.jz());
  jx_a_ = kron(is, fa_.jx());
  jz_a_ = kron(is, fa_.jz());
  coupling_ops_.reserve(9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) coupling_ops_.push_back(kron(fs_.j(i), fa_.j(j)));
  }
}

ComplexMatrix TunnelingObjective::ancilla_h(const LearnVector& v) const {
  return build_well_h({v.eta_a, v.gamma_a, v.delta_a, spec_.n_ancilla}, fa_);
}

ComplexMatrix TunnelingObjective::joint_h(const LearnVector& v) const {
  ComplexMatrix h = hs_joint_ + v.eta_a * jz2_a_ - v.gamma_a * jx_a_ - v.delta_a * jz_a_;
  const Eigen::Matrix3d& alpha = v.coupling().coefficients();
  for (int i = 0; i < 9; ++i) {
    if (const double a = alpha(i / 3, i % 3); a != 0.0) h += a * coupling_ops_[i];
  }
  return h;
}

double TunnelingObjective::probability(const LearnVector& v, bool evaluation,
                                       double eval_dt) const {
  if (v.n_ancilla() != spec_.n_ancilla) {
    throw std::invalid_argument("TunnelingObjective: learn vector has the wrong ancilla size");
  }
  const ComplexMatrix rho_a = realize_ancilla(v);
  const double t = v.t_hat();
  if (!spec_.noisy) {
    return population(ReducedDynamics(rho_s0_, rho_a, joint_h(v)).system_state(t), spec_.k_target);
  }
  GateSpec gate{t, GateKind::smooth, spec_.gate_temperature > 0.0 ? spec_.gate_temperature : spec_.dt};
  double dt = spec_.dt;
  if (evaluation) {
    gate.kind = GateKind::hard;
    dt = eval_dt;
  }
  const JointDims dims{fs_.dim(), fa_.dim()};
  const GkslGenerator generator(joint_h(v), spec_.noise, dims);
  const ComplexMatrix rho = evolve_noisy_final(kron(rho_s0_, rho_a), generator, gate,
                                               spec_.horizon_T, dt);
  return population(partial_trace_ancilla(rho, dims.dim_s, dims.dim_a), spec_.k_target);
}

double TunnelingObjective::loss(const LearnVector& v) const { return 1.0 - probability(v); }

RealVector TunnelingObjective::gradient(const LearnVector& v, GradientEngine engine) const {
  RealVector g = engine == GradientEngine::finite_diff ? gradient_finite_diff(v)
                                                       : gradient_forward_dual(v);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g(i))) {
      std::ostringstream msg;
      msg << "gradient (" << to_string(engine) << "): component " << i << " is " << g(i)
          << " at parameter value " << v.flatten()(i) << ", t_hat=" << v.t_hat();
      throw NumericalError(msg.str());
    }
  }
  return g;
}

RealVector TunnelingObjective::gradient_finite_diff(const LearnVector& v) const {
  const RealVector x = v.flatten();
  RealVector g = RealVector::Zero(x.size());
  LearnVector probe = v;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (v.is_frozen(static_cast<std::size_t>(i))) continue;
    const double h = std::max(1e-5 * std::abs(x(i)), 1e-7);
    RealVector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    probe.unflatten(xp);
    const double lp = loss(probe);
    probe.unflatten(xm);
    const double lm = loss(probe);
    g(i) = (lp - lm) / (xp(i) - xm(i));
    if (!std::isfinite(g(i))) {
      std::ostringstream msg;
      msg << "finite-difference gradient: component " << i << " is " << g(i) << " (probes "
          << lp << ", " << lm << " at step " << h << ")";
      throw NumericalError(msg.str());
    }
  }
  return g;
}

RealVector TunnelingObjective::gradient_forward_dual(const LearnVector& v) const {
  RealVector g = RealVector::Zero(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v.is_frozen(i)) g(static_cast<Eigen::Index>(i)) = dual_loss_derivative(v, i);
  }
  return g;
}

double TunnelingObjective::dual_loss_derivative(const LearnVector& v, std::size_t index) const {
  const auto in = [&](ParamGroup group) {
    const auto [start, len] = v.group_range(group);
    return index >= start && index < start + len;
  };
  // Hamiltonian is linear in every Hamiltonian parameter.
  DualMatrix h = DualMatrix::constant(joint_h(v));
  if (in(ParamGroup::eta_a)) h.tangent = jz2_a_;
  if (in(ParamGroup::gamma_a)) h.tangent = -jx_a_;
  if (in(ParamGroup::delta_a)) h.tangent = -jz_a_;
  if (in(ParamGroup::alpha)) {
    const std::size_t offset = index - v.group_range(ParamGroup::alpha).first;
    h.tangent = coupling_ops_[v.full_coupling() ? offset : 8];
  }

  const DualReal t = softplus(DualReal{v.t_raw(), in(ParamGroup::t_hat) ? 1.0 : 0.0});

  // rho_A = M / tr(M): d rho_A = dM / tr - M dtr / tr^2.
  DualMatrix rho_a = DualMatrix::constant(realize_ancilla(v));
  if (in(ParamGroup::ancilla)) {
    const std::size_t offset = index - v.group_range(ParamGroup::ancilla).first;
    const int d = v.ancilla_dim();
    if (v.mode() == AncillaMode::factor) {
      const ComplexMatrix& b = v.factor();
      ComplexMatrix db = ComplexMatrix::Zero(d, d);
      const std::size_t entry = offset / 2;
      db(static_cast<Eigen::Index>(entry / d), static_cast<Eigen::Index>(entry % d)) =
          offset % 2 == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
      const ComplexMatrix m = b * b.adjoint();
      const ComplexMatrix dm = db * b.adjoint() + b * db.adjoint();
      const double tr = m.trace().real();
      rho_a.tangent = dm / tr - m * (dm.trace().real() / (tr * tr));
    } else {
      const RealVector& w = v.weights();
      const double s = w.squaredNorm();
      const auto k = static_cast<Eigen::Index>(offset);
      RealVector dp = -(w.cwiseAbs2()) * (2.0 * w(k) / (s * s));
      dp(k) += 2.0 * w(k) / s;
      rho_a.tangent = dp.cast<Complex>().asDiagonal();
    }
  }
  const DualMatrix rho0{kron(rho_s0_, rho_a.value), kron(rho_s0_, rho_a.tangent)};
  const int dim_s = fs_.dim();
  const int dim_a = fa_.dim();

  DualMatrix rho_t;
  if (!spec_.noisy) {
    const DualMatrix u = expm_minus_i(h, t);
    rho_t = u * rho0 * u.adjoint();
  } else {
    const Eigen::MatrixXcd rates = dephasing_rates(spec_.noise, {dim_s, dim_a}).cast<Complex>();
    const auto rhs = [&](const DualMatrix& r) {
      ComplexMatrix val = h.value * r.value - r.value * h.value;
      ComplexMatrix tan = h.tangent * r.value + h.value * r.tangent - r.tangent * h.value -
                          r.value * h.tangent;
      val = Complex(0.0, -1.0) * val;
      val.array() += rates.array() * r.value.array();
      tan = Complex(0.0, -1.0) * tan;
      tan.array() += rates.array() * r.tangent.array();
      return DualMatrix{std::move(val), std::move(tan)};
    };
    const double tau = spec_.gate_temperature > 0.0 ? spec_.gate_temperature : spec_.dt;
    const long steps = step_count(spec_.horizon_T, spec_.dt);
    rho_t = rho0;
    for (long j = 1; j <= steps; ++j) {
      const double step_time = j * spec_.dt;
      const DualReal w = logistic(DualReal{(t.v - step_time) / tau, t.d / tau});
      if (w.v < kSmoothGateCutoff && step_time > t.v) break;
      const DualMatrix next = rk4_step(rho_t, spec_.dt, rhs);
      rho_t = rho_t + w * (next - rho_t);
    }
  }
  const ComplexMatrix d_rho_s = partial_trace_ancilla(rho_t.tangent, dim_s, dim_a);
  return -d_rho_s(spec_.k_target, spec_.k_target).real();
}

// ---------------------------------------------------------------------------
// ADAM

AdamState AdamState::zeros(std::size_t n, double lr) {
  AdamState a;
  a.m = RealVector::Zero(static_cast<Eigen::Index>(n));
  a.v = RealVector::Zero(static_cast<Eigen::Index>(n));
  a.lr = lr;
  return a;
}

std::pair<AdamState, RealVector> adam_step(AdamState a, const RealVector& x, const RealVector& g) {
  if (x.size() != g.size() || a.m.size() != x.size() || a.v.size() != x.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  a.step += 1;
  a.m = a.beta1 * a.m + (1.0 - a.beta1) * g;
  a.v = a.beta2 * a.v + (1.0 - a.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(a.step));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(a.step));
  const RealVector m_hat = a.m / c1;
  const RealVector v_hat = a.v / c2;
  RealVector next =
      x - a.lr * (m_hat.array() / (v_hat.array().sqrt() + a.epsilon)).matrix();
  return {std::move(a), std::move(next)};
}

std::pair<AdamState, LearnVector> adam_step(const AdamState& a, const LearnVector& v,
                                            const RealVector& g) {
  auto [state, x] = adam_step(a, v.flatten(), g);
  LearnVector next = v;
  next.unflatten(x);
  return {std::move(state), std::move(next)};
}

// ---------------------------------------------------------------------------
// Normalization and training

double normalization_divisor(const LearnVector& v) {
  double m = std::max({std::abs(v.eta_a), std::abs(v.gamma_a), std::abs(v.delta_a)});
  return std::max(m, v.coupling().coefficients().cwiseAbs().maxCoeff());
}

ComplexMatrix normalize_hamiltonian(const TunnelingObjective& parts, const LearnVector& v) {
  const double divisor = normalization_divisor(v);
  if (divisor == 0.0) {
    throw std::invalid_argument("normalize_hamiltonian: all learned parameters are zero");
  }
  return parts.joint_h(v) / divisor;
}

TrainReport train(const TrainSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const TunnelingObjective objective(settings.objective);
  LearnVector v = settings.initial;
  if (v.n_ancilla() != settings.objective.n_ancilla) {
    throw std::invalid_argument("train: initial vector and objective disagree on ancilla size");
  }
  if (settings.max_iters < 1) throw std::invalid_argument("train: max_iters must be >= 1");
  if (settings.project_diagonal) project_ancilla_diagonal(v);

  TrainReport report;
  report.losses.reserve(static_cast<std::size_t>(settings.max_iters));
  report.snapshots.reserve(static_cast<std::size_t>(settings.max_iters));
  AdamState adam = AdamState::zeros(v.size(), settings.lr);

  for (int iter = 0; iter < settings.max_iters; ++iter) {
    const double loss = objective.loss(v);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "train: non-finite loss at iteration " << iter;
      throw NumericalError(msg.str());
    }
    report.losses.push_back(loss);
    report.snapshots.push_back({v.eta_a, v.gamma_a, v.delta_a, v.alpha(), v.t_hat(),
                                realize_ancilla(v).trace().real()});
    const int window = settings.early_stop_window;
    if (window > 0 && iter >= window &&
        std::abs(loss - report.losses[static_cast<std::size_t>(iter - window)]) <
            settings.early_stop_tol) {
      report.converged = true;
      break;
    }
    const RealVector g = objective.gradient(v, settings.engine);
    std::tie(adam, v) = adam_step(adam, v, g);
    if (settings.project_diagonal) project_ancilla_diagonal(v);
  }

  report.iterations = static_cast<int>(report.losses.size());
  report.final_vector = v;
  report.rho_a = realize_ancilla(v);
  report.t_star = v.t_hat();
  report.p_star = objective.probability(v, true, settings.eval_dt);
  report.window_T = settings.window_T > 0.0 ? settings.window_T : 2.0 * report.t_star;
  report.normalization_divisor = normalization_divisor(v);
  report.normalized_t_star = report.normalization_divisor > 0.0
                                 ? report.t_star * report.normalization_divisor
                                 : report.t_star;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string to_string(GradientEngine e) {
  return e == GradientEngine::finite_diff ? "finite_diff" : "forward_dual";
}

std::string to_string(AncillaMode m) { return m == AncillaMode::factor ? "factor" : "diagonal"; }

}  // namespace tunnelcat
