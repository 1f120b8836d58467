// Acceptance suite: one PASS/FAIL line per criterion.
//
//   tunnelcat_acceptance [--only 1,2,...] [--expect-fail 3,...]
//
// Exit status is 0 when the set of failing criteria equals the expected set.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"
#include "tunnelcat/closedform.hpp"
#include "tunnelcat/dynamics.hpp"
#include "tunnelcat/experiment.hpp"
#include "tunnelcat/fock.hpp"
#include "tunnelcat/learn.hpp"
#include "tunnelcat/lindblad.hpp"
#include "tunnelcat/model.hpp"

using namespace tunnelcat;

namespace {

// Pinned thresholds.
constexpr double kFormulaTol = 1e-10;
constexpr double kPeakTol = 1e-9;
constexpr double kFormulaSeconds = 1.0;
constexpr double kOracleTol = 1e-8;
constexpr double kOracleSeconds = 10.0;
constexpr double kAlphaRelTol = 0.02;
constexpr double kLearnedP = 0.999;
constexpr int kLearnIters = 2000;
constexpr double kLearnSeconds = 120.0;
constexpr double kBareN3 = 1e-4;
constexpr double kBareN4 = 1e-6;
constexpr double kBareWindow = 60.0;
constexpr double kCatalyzedP = 0.99;
constexpr double kCatalyzedSeconds = 900.0;
constexpr double kAsymptoteTol = 0.02;
constexpr double kAsymptoteT = 20000.0;
constexpr double kAsymptoteSeconds = 60.0;
constexpr double kOrderLo = 3.7;
constexpr double kOrderHi = 4.3;
constexpr int kConservationInstances = 100;
constexpr double kConservationTol = 1e-6;
constexpr int kGradientObjectives = 20;
constexpr double kGradientRelTol = 1e-5;
constexpr double kTrendInversion = 0.05;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

ExperimentConfig fig2_cell_config() {
  ExperimentConfig cfg = load_config(resolve_config("fig2_ns3"));
  cfg.optimizer.max_iters = 3000;
  return cfg;
}

// Criteria 5 and 10 share the (N_S = 3, N_A = 4) run.
std::map<int, TrainOutcome>& trained_ns3() {
  static std::map<int, TrainOutcome> cache;
  return cache;
}

const TrainOutcome& train_ns3(int n_a) {
  auto& cache = trained_ns3();
  auto it = cache.find(n_a);
  if (it == cache.end()) it = cache.emplace(n_a, train_cell(fig2_cell_config(), 3, n_a, 0)).first;
  return it->second;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double g = 0.5, d = 1.0;  // Pauli convention
  const auto j = closedform::to_j_convention(g, d, 0.0);
  const FockSpace fs(1);
  const UnitaryPropagator u(build_well_h({0.0, j.gamma, j.delta, 1}, fs));
  const ComplexMatrix rho0 = localized_state(fs, 1);
  double err = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double t = 20.0 * i / 199.0;
    err = std::max(err, std::abs(transfer_probability(u.evolve(rho0, t), 0) -
                                 closedform::single_particle_prob(g, d, t)));
  }
  const MaxProbability m = find_max_probability(
      [&](double t) { return transfer_probability(u.evolve(rho0, t), 0); }, 20.0);
  const double secs = seconds_since(t0);
  const bool pass = err < kFormulaTol && std::abs(m.p_star - 0.2) <= kPeakTol && secs < kFormulaSeconds;
  return {pass, "max|P_sim - P_formula| = " + fmt("%.2e", err) + " (< 1e-10), P* = " +
                    fmt("%.12f", m.p_star) + " at t = " + fmt("%.4f", m.t_star) +
                    " (0.2 +- 1e-9), " + fmt("%.3f", secs) + " s"};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = load_config(resolve_config("oracle"));
  cfg.oracle.n_a = {1, 2, 3, 4, 5};
  cfg.oracle.cases = 10;
  cfg.oracle.times = 50;
  const OracleResult r = oracle_check(cfg);
  const double secs = seconds_since(t0);
  return {r.max_error < kOracleTol && secs < kOracleSeconds,
          "max error " + fmt("%.2e", r.max_error) + " over " + std::to_string(r.evaluations) +
              " evaluations in " + std::to_string(r.cases) + " cases (< 1e-8), " +
              fmt("%.2f", secs) + " s"};
}

Outcome criterion3() {
  const ExperimentConfig cfg = load_config(resolve_config("fig1_train"));
  const TrainOutcome o = train_cell(cfg, 1, 1, 0);
  const double delta = cfg.system.delta;
  const double alpha = o.row.alpha;
  const double rel = std::abs(alpha - (-delta)) / std::abs(delta);
  const bool alpha_ok = rel <= kAlphaRelTol;
  const bool p_ok = o.report.p_star >= kLearnedP;
  const bool iters_ok = o.report.iterations <= kLearnIters;
  const bool time_ok = o.report.wall_seconds < kLearnSeconds;
  std::ostringstream s;
  s << "alpha = " << fmt("%.6f", alpha) << " vs target -Delta_J = " << fmt("%.3f", -delta)
    << " (rel err " << fmt("%.3f", rel) << ", tol 0.02: " << (alpha_ok ? "ok" : "MISS")
    << "); P = " << fmt("%.9f", o.report.p_star) << " (>= 0.999: " << (p_ok ? "ok" : "MISS")
    << "); " << o.report.iterations << " iterations; " << fmt("%.2f", o.report.wall_seconds)
    << " s. Analytic resonance for J_z(x)J_z coupling with the ancilla in |L>: alpha = "
       "-2 Delta_J = "
    << fmt("%.3f", -2.0 * delta);
  return {alpha_ok && p_ok && iters_ok && time_ok, s.str()};
}

Outcome criterion4() {
  const auto bare_sup = [](int n) {
    const FockSpace fs(n);
    const UnitaryPropagator u(build_well_h({1.0, 0.5, 1.0, n}, fs));
    const ComplexMatrix rho0 = localized_state(fs, n);
    return find_max_probability([&](double t) { return transfer_probability(u.evolve(rho0, t), 0); },
                                kBareWindow, 20000)
        .p_star;
  };
  const double p3 = bare_sup(3), p4 = bare_sup(4);
  return {p3 < kBareN3 && p4 < kBareN4,
          "sup P over [0, 60]: N_S=3 " + fmt("%.3e", p3) + " (< 1e-4), N_S=4 " + fmt("%.3e", p4) +
              " (< 1e-6)"};
}

Outcome criterion5() {
  const TrainOutcome& o = train_ns3(4);
  return {o.report.p_star >= kCatalyzedP && o.report.wall_seconds < kCatalyzedSeconds,
          "N_S=3, N_A=4 trained P = " + fmt("%.6f", o.report.p_star) + " (>= 0.99) after " +
              std::to_string(o.report.iterations) + " iterations, " +
              fmt("%.1f", o.report.wall_seconds) + " s"};
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const FockSpace fs(4);
  const ComplexMatrix h = build_well_h({1.0, 0.5, 1.0, 4}, fs);
  const GkslGenerator gen(h, {0.01, 0.0}, {5, 1});
  const ComplexMatrix rho = evolve_noisy_final(localized_state(fs, 4), gen,
                                               {kAsymptoteT, GateKind::hard, 0.01}, kAsymptoteT, 0.01);
  const double p = transfer_probability(rho, 0);
  const double secs = seconds_since(t0);
  return {std::abs(p - 0.2) < kAsymptoteTol && secs < kAsymptoteSeconds,
          "N_S=4, lambda_S=0.01, dt=0.01: P(T=20000) = " + fmt("%.6f", p) +
              " (|P - 0.2| < 0.02), " + fmt("%.1f", secs) + " s"};
}

Outcome criterion7() {
  std::mt19937_64 rng(2024);
  const int ds = 3, da = 2;
  const ComplexMatrix h = testing::random_hermitian(ds * da, rng);
  const ComplexMatrix rho0 = testing::random_density(ds * da, rng);
  const GkslGenerator gen(h, {0.1, 0.07}, {ds, da});
  const double T = 2.0;
  const auto run = [&](double dt) {
    return evolve_noisy_final(rho0, gen, {T, GateKind::hard, dt}, T, dt);
  };
  const ComplexMatrix a = run(0.1), b = run(0.05), c = run(0.025);
  const double order = std::log2((a - b).norm() / (b - c).norm());
  return {order >= kOrderLo && order <= kOrderHi,
          "Richardson order from dt = 0.1/0.05/0.025 on a random 6x6 GKSL trajectory: " +
              fmt("%.3f", order) + " (in [3.7, 4.3])"};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> when(0.0, 5.0), lam(0.0, 0.2);
  int unitary_ok = 0, gksl_ok = 0;
  double worst = 0.0;
  const auto check = [&](const ComplexMatrix& rho) {
    const double tr = std::abs(rho.trace() - Complex(1.0));
    const double herm = max_abs(rho - rho.adjoint());
    const double neg = std::max(0.0, -min_eigenvalue(rho));
    worst = std::max({worst, tr, herm, neg});
    return tr < kConservationTol && herm < kConservationTol && neg < kConservationTol;
  };
  for (int i = 0; i < kConservationInstances; ++i) {
    const int d = 2 + i % 9;
    const ComplexMatrix h = testing::random_hermitian(d, rng);
    if (check(propagate(testing::random_density(d, rng), h, when(rng)))) ++unitary_ok;
  }
  for (int i = 0; i < kConservationInstances; ++i) {
    const int ds = 2 + i % 3, da = 1 + i % 3;
    const ComplexMatrix h = testing::random_hermitian(ds * da, rng, 0.5);
    const auto traj = evolve_noisy(testing::random_density(ds * da, rng), h, {lam(rng), lam(rng)},
                                   {ds, da}, {3.0, GateKind::hard, 0.01}, 3.0, 0.01, 30);
    bool ok = true;
    for (const auto& s : traj) ok = check(s.rho) && ok;
    if (ok) ++gksl_ok;
  }
  return {unitary_ok == kConservationInstances && gksl_ok == kConservationInstances,
          "unitary " + std::to_string(unitary_ok) + "/100, GKSL " + std::to_string(gksl_ok) +
              "/100 instances within 1e-6; worst deviation " + fmt("%.2e", worst)};
}

Outcome criterion9() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int ok = 0;
  for (int i = 0; i < kGradientObjectives; ++i) {
    const int ns = 1 + i % 3, na = 1 + (i / 3) % 3;  // joint dimension <= 16
    const AncillaMode mode = i % 2 ? AncillaMode::diagonal : AncillaMode::factor;
    const bool full = i % 5 == 0;
    ObjectiveSpec spec;
    spec.system = {1.0, 0.5, 1.0, ns};
    spec.n_ancilla = na;
    const TunnelingObjective obj(spec);
    LearnVector v(na, mode, full);
    v.eta_a = u(rng);
    v.gamma_a = u(rng);
    v.delta_a = u(rng);
    if (full) {
      Eigen::Matrix3d m;
      for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = u(rng);
      v.set_coupling(Coupling::matrix(m));
    } else {
      v.set_coupling(Coupling::scalar(u(rng)));
    }
    v.set_t_hat(0.5 + 3.0 * std::abs(u(rng)));
    if (mode == AncillaMode::factor) v.set_factor(random_factor(na + 1, rng));
    else v.set_weights(random_weights(na + 1, rng));
    const RealVector a = obj.gradient(v, GradientEngine::finite_diff);
    const RealVector b = obj.gradient(v, GradientEngine::forward_dual);
    const double rel = (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
    worst = std::max(worst, rel);
    if (rel < kGradientRelTol) ++ok;
  }
  return {ok == kGradientObjectives,
          std::to_string(ok) + "/20 objectives agree; worst relative gap " + fmt("%.2e", worst) +
              " (< 1e-5)"};
}

Outcome criterion10() {
  std::vector<double> t;
  std::ostringstream s;
  s << "N_S=3 normalized t*:";
  for (int na : {2, 4, 6}) {
    const TrainOutcome& o = train_ns3(na);
    t.push_back(o.row.t_star);
    s << " N_A=" << na << " -> " << fmt("%.3f", o.row.t_star) << " (raw t_hat "
      << fmt("%.3f", o.report.t_star) << ", P " << fmt("%.4f", o.report.p_star) << ")";
  }
  int inversions = 0;
  bool within = true;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[i - 1]) {
      ++inversions;
      within = within && (t[i] - t[i - 1]) <= kTrendInversion * t[i - 1];
    }
  }
  s << "; inversions " << inversions << " (<= 1, each <= 5%)";
  return {inversions <= 1 && within, s.str()};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expected_fail;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = parse_list(argv[i + 1]);
    else if (flag == "--expect-fail") expected_fail = parse_list(argv[i + 1]);
    else {
      std::fprintf(stderr, "usage: %s [--only LIST] [--expect-fail LIST]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"single-particle formula and P* = 0.2", criterion1},
      {"closed-form oracle, N_A = 1..5", criterion2},
      {"learned coupling alpha = -Delta, P >= 0.999", criterion3},
      {"bare multi-particle suppression", criterion4},
      {"catalyzed transfer N_S=3, N_A=4", criterion5},
      {"noisy asymptote P -> 0.2", criterion6},
      {"RK4 Richardson order", criterion7},
      {"trace/Hermiticity/positivity conservation", criterion8},
      {"finite-difference vs forward-dual gradients", criterion9},
      {"t* non-increasing in N_A", criterion10},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("%s criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }

  std::set<int> expected;
  for (int id : expected_fail) {
    if (only.empty() || only.count(id)) expected.insert(id);
  }
  std::printf("summary: %zu failed", failed.size());
  if (!expected.empty()) {
    std::printf(" (expected to fail:");
    for (int id : expected) std::printf(" %d", id);
    std::printf(")");
  }
  std::printf("\n");
  return failed == expected ? 0 : 1;
}
