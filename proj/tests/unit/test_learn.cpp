#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "tunnelcat/dual.hpp"
#include "tunnelcat/dynamics.hpp"
#include "tunnelcat/learn.hpp"

using namespace tunnelcat;

namespace {

LearnVector random_vector(int n_a, AncillaMode mode, std::mt19937_64& rng, bool full = false) {
  LearnVector v(n_a, mode, full);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  v.eta_a = u(rng);
  v.gamma_a = u(rng);
  v.delta_a = u(rng);
  if (full) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = u(rng);
    v.set_coupling(Coupling::matrix(m));
  } else {
    v.set_coupling(Coupling::scalar(u(rng)));
  }
  v.set_t_hat(1.0 + 2.0 * std::abs(u(rng)));
  if (mode == AncillaMode::factor) v.set_factor(random_factor(n_a + 1, rng));
  else v.set_weights(random_weights(n_a + 1, rng));
  return v;
}

double relative_gap(const RealVector& a, const RealVector& b) {
  return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

}  // namespace

TEST_SUITE("learn") {
  TEST_CASE("flatten and unflatten are inverse") {
    std::mt19937_64 rng(1);
    for (AncillaMode mode : {AncillaMode::factor, AncillaMode::diagonal}) {
      for (bool full : {false, true}) {
        const LearnVector v = random_vector(3, mode, rng, full);
        LearnVector w(3, mode, full);
        w.unflatten(v.flatten());
        CHECK((w.flatten() - v.flatten()).norm() == 0.0);
        CHECK(w.t_hat() == doctest::Approx(v.t_hat()));
        const std::size_t d = 4;
        CHECK(v.size() == 3 + (full ? 9 : 1) + 1 + (mode == AncillaMode::factor ? 2 * d * d : d));
      }
    }
  }

  TEST_CASE("t_hat stays positive through the softplus") {
    LearnVector v(1, AncillaMode::factor);
    v.set_t_hat(1e-3);
    CHECK(v.t_hat() == doctest::Approx(1e-3));
    RealVector x = v.flatten();
    x(v.group_range(ParamGroup::t_hat).first) = -50.0;
    v.unflatten(x);
    CHECK(v.t_hat() > 0.0);
    CHECK_THROWS_AS(v.set_t_hat(0.0), std::invalid_argument);
  }

  TEST_CASE("realized ancilla is a density matrix") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      const LearnVector v = random_vector(1 + trial % 5, trial % 2 ? AncillaMode::factor : AncillaMode::diagonal, rng);
      const ComplexMatrix rho = realize_ancilla(v);
      CHECK_NOTHROW(require_density_matrix(rho, "rho_a"));
    }
    LearnVector zero(2, AncillaMode::diagonal);
    zero.set_weights(RealVector::Zero(3));
    CHECK_THROWS_AS(realize_ancilla(zero), NumericalError);
  }

  TEST_CASE("loss is invariant under global phase of B and sign flips of w") {
    std::mt19937_64 rng(3);
    const TunnelingObjective obj({{1.0, 0.5, 1.0, 2}, 2, false, {}, 20.0, 0.05, 0.0, 0});
    LearnVector v = random_vector(2, AncillaMode::factor, rng);
    const double base = obj.loss(v);
    v.set_factor(std::polar(1.0, 0.83) * v.factor());
    CHECK(obj.loss(v) == doctest::Approx(base).epsilon(1e-12));

    LearnVector w = random_vector(2, AncillaMode::diagonal, rng);
    const double wbase = obj.loss(w);
    RealVector flipped = w.weights();
    flipped(0) = -flipped(0);
    flipped(2) = -flipped(2);
    w.set_weights(flipped);
    CHECK(obj.loss(w) == doctest::Approx(wbase).epsilon(1e-12));
  }

  TEST_CASE("noiseless loss agrees with a direct propagation") {
    std::mt19937_64 rng(4);
    const ObjectiveSpec spec{{1.0, 0.5, 1.0, 2}, 3, false, {}, 20.0, 0.05, 0.0, 0};
    const TunnelingObjective obj(spec);
    const LearnVector v = random_vector(3, AncillaMode::factor, rng, true);
    const ComplexMatrix rho0 = kron(obj.system_initial_state(), realize_ancilla(v));
    const ComplexMatrix u = testing::expm_reference(obj.joint_h(v), v.t_hat());
    const ComplexMatrix rs = partial_trace_ancilla(u * rho0 * u.adjoint(), 3, 4);
    CHECK(obj.probability(v) == doctest::Approx(rs(0, 0).real()).epsilon(1e-10));
  }

  TEST_CASE("dual exponential matches a finite difference of the reference") {
    std::mt19937_64 rng(5);
    const ComplexMatrix h = testing::random_hermitian(5, rng);
    const ComplexMatrix dh = testing::random_hermitian(5, rng);
    const double t = 1.7, dt = 0.3, eps = 1e-6;
    const DualMatrix u = expm_minus_i({h, dh}, {t, dt});
    const ComplexMatrix fd = (testing::expm_reference(h + eps * dh, t + eps * dt) -
                              testing::expm_reference(h - eps * dh, t - eps * dt)) / (2 * eps);
    CHECK(approx_equal(u.value, testing::expm_reference(h, t), 1e-12));
    CHECK(approx_equal(u.tangent, fd, 1e-7));
  }

  TEST_CASE("finite-difference and forward-dual gradients agree (noiseless)") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 6; ++trial) {
      const int ns = 1 + trial % 3, na = 1 + trial % 3;
      const ObjectiveSpec spec{{1.0, 0.5, 1.0, ns}, na, false, {}, 20.0, 0.05, 0.0, 0};
      const TunnelingObjective obj(spec);
      const LearnVector v = random_vector(na, trial % 2 ? AncillaMode::factor : AncillaMode::diagonal,
                                          rng, trial == 5);
      const RealVector a = obj.gradient(v, GradientEngine::finite_diff);
      const RealVector b = obj.gradient(v, GradientEngine::forward_dual);
      CHECK(relative_gap(a, b) < 1e-5);
    }
  }

  TEST_CASE("finite-difference and forward-dual gradients agree (noisy)") {
    std::mt19937_64 rng(7);
    const ObjectiveSpec spec{{1.0, 0.5, 1.0, 1}, 1, true, {0.01, 0.01}, 4.0, 0.05, 0.0, 0};
    const TunnelingObjective obj(spec);
    const LearnVector v = random_vector(1, AncillaMode::diagonal, rng);
    const RealVector a = obj.gradient(v, GradientEngine::finite_diff);
    const RealVector b = obj.gradient(v, GradientEngine::forward_dual);
    CHECK(relative_gap(a, b) < 1e-5);
  }

  TEST_CASE("frozen groups get zero gradient") {
    std::mt19937_64 rng(8);
    const TunnelingObjective obj({{1.0, 0.5, 1.0, 2}, 2, false, {}, 20.0, 0.05, 0.0, 0});
    LearnVector v = random_vector(2, AncillaMode::factor, rng);
    v.freeze(ParamGroup::alpha);
    v.freeze(ParamGroup::ancilla);
    for (GradientEngine e : {GradientEngine::finite_diff, GradientEngine::forward_dual}) {
      const RealVector g = obj.gradient(v, e);
      for (ParamGroup grp : {ParamGroup::alpha, ParamGroup::ancilla}) {
        const auto [start, len] = v.group_range(grp);
        CHECK(g.segment(start, len).norm() == 0.0);
      }
      const auto [ts, tl] = v.group_range(ParamGroup::t_hat);
      CHECK(g.segment(ts, tl).norm() > 0.0);
    }
  }

  TEST_CASE("ADAM reaches the bottom of a quadratic bowl") {
    RealVector x = RealVector::Constant(4, 1.0);
    AdamState a = AdamState::zeros(4, 0.01);
    int iters = 0;
    while (x.norm() >= 0.01 && iters < 600) {
      std::tie(a, x) = adam_step(a, x, 2.0 * x);
      ++iters;
    }
    CHECK(x.norm() < 0.01);
    CHECK(iters < 600);
  }

  TEST_CASE("ADAM first step moves each coordinate by lr against the gradient sign") {
    RealVector x(3);
    x << 1.0, -2.0, 0.5;
    RealVector g(3);
    g << 3.0, -0.1, 0.0;
    const auto [a, y] = adam_step(AdamState::zeros(3, 0.01), x, g);
    CHECK(y(0) == doctest::Approx(0.99).epsilon(1e-6));
    CHECK(y(1) == doctest::Approx(-1.99).epsilon(1e-6));
    CHECK(y(2) == 0.5);
    CHECK(a.step == 1);
  }

  TEST_CASE("diagonal projection yields real diagonal unit-trace states") {
    std::mt19937_64 rng(9);
    LearnVector v = random_vector(3, AncillaMode::factor, rng);
    project_ancilla_diagonal(v);
    const ComplexMatrix rho = realize_ancilla(v);
    CHECK(approx_equal(rho, ComplexMatrix(rho.diagonal().real().cast<Complex>().asDiagonal()), 1e-14));
    CHECK(rho.trace().real() == doctest::Approx(1.0));
  }

  TEST_CASE("learning t_hat alone recovers the uncoupled maximum") {
    TrainSettings s;
    s.objective.system = {0.0, 0.5, 1.0, 1};
    s.objective.n_ancilla = 1;
    LearnVector v(1, AncillaMode::factor);
    v.eta_a = 0.0;
    v.gamma_a = 0.0;
    v.set_coupling(Coupling::scalar(0.0));
    for (ParamGroup g : {ParamGroup::eta_a, ParamGroup::gamma_a, ParamGroup::delta_a,
                         ParamGroup::alpha, ParamGroup::ancilla}) {
      v.freeze(g);
    }
    s.initial = v;
    s.max_iters = 4000;
    const TrainReport r = train(s);
    const TunnelingObjective obj(s.objective);
    const FockSpace fs(1);
    const UnitaryPropagator bare(obj.system_h());
    const MaxProbability m = find_max_probability(
        [&](double t) { return bare.evolve(obj.system_initial_state(), t)(0, 0).real(); }, 10.0);
    CHECK(std::abs((1.0 - r.losses.back()) - m.p_star) < 1e-6);
  }

  TEST_CASE("every optimizer step keeps rho_A valid and runs are reproducible") {
    std::mt19937_64 rng(10);
    TrainSettings s;
    s.objective.system = {1.0, 0.5, 1.0, 2};
    s.objective.n_ancilla = 2;
    s.initial = random_vector(2, AncillaMode::factor, rng);
    s.max_iters = 40;
    const TrainReport a = train(s);
    const TrainReport b = train(s);
    REQUIRE(a.losses.size() == b.losses.size());
    for (std::size_t i = 0; i < a.losses.size(); ++i) {
      CHECK(a.losses[i] == b.losses[i]);
      CHECK(a.snapshots[i].alpha == b.snapshots[i].alpha);
      CHECK(a.snapshots[i].trace_rho_a == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK((a.final_vector.flatten() - b.final_vector.flatten()).norm() == 0.0);
    CHECK_NOTHROW(require_density_matrix(a.rho_a, "rho_a"));
  }

  TEST_CASE("normalization divisor and normalized Hamiltonian") {
    LearnVector v(1, AncillaMode::factor);
    v.eta_a = 0.5;
    v.gamma_a = -3.0;
    v.delta_a = 1.0;
    v.set_coupling(Coupling::scalar(2.0));
    CHECK(normalization_divisor(v) == 3.0);
    const TunnelingObjective obj({{1.0, 0.5, 1.0, 1}, 1, false, {}, 20.0, 0.05, 0.0, 0});
    CHECK(approx_equal(normalize_hamiltonian(obj, v), obj.joint_h(v) / 3.0));
    LearnVector z(1, AncillaMode::factor);
    z.eta_a = z.gamma_a = z.delta_a = 0.0;
    z.set_coupling(Coupling::scalar(0.0));
    CHECK_THROWS_AS(normalize_hamiltonian(obj, z), std::invalid_argument);
  }
}
