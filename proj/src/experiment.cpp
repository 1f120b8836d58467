#include "tunnelcat/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "tunnelcat/closedform.hpp"
#include "tunnelcat/dynamics.hpp"
#include "tunnelcat/fock.hpp"
#include "tunnelcat/lindblad.hpp"
#include "tunnelcat/model.hpp"

namespace tunnelcat {

using nlohmann::json;

std::string library_version() { return TUNNELCAT_VERSION; }

std::filesystem::path resolve_config(const std::string& name_or_path) {
  const std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return p;
  std::filesystem::path preset = std::filesystem::path(TUNNELCAT_PRESET_DIR) / p;
  if (preset.extension() != ".json") preset += ".json";
  return std::filesystem::exists(preset) ? preset : p;
}

void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.out_dir) cfg.output.dir = opts.out_dir->string();
  if (opts.seed) {
    cfg.optimizer.seed = *opts.seed;
    if (cfg.sweep) cfg.sweep->seeds = {*opts.seed};
  }
  if (opts.dt) {
    if (!(*opts.dt > 0.0)) throw ConfigError("--dt: must be > 0");
    cfg.integrator.dt = *opts.dt;
  }
  if (opts.workers < 1) throw ConfigError("--workers: must be >= 1");
  validate(cfg);
}

namespace {

ComplexMatrix projector(const Eigen::VectorXcd& psi) { return psi * psi.adjoint(); }

Eigen::VectorXcd basis_vector(int dim, int k) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  v(k) = 1.0;
  return v;
}

/// Evenly spaced times 0, h, 2h, ... covering [0, window_T]. Noisy runs snap
/// h to a multiple of dt so samples land on the integrator grid.
std::vector<double> time_grid(double window_T, int points, bool noisy, double dt, int* stride) {
  points = std::max(points, 2);
  double h = window_T / (points - 1);
  int s = 1;
  if (noisy) {
    s = std::max(1, static_cast<int>(std::lround(h / dt)));
    h = s * dt;
  }
  if (stride) *stride = s;
  std::vector<double> t;
  const long count = static_cast<long>(std::floor(window_T / h + 1e-9)) + 1;
  for (long j = 0; j < count; ++j) t.push_back(j * h);
  return t;
}

std::vector<StateSample> reduce_samples(const std::vector<TrajectorySample>& traj, int dim_s,
                                        int dim_a) {
  std::vector<StateSample> out;
  out.reserve(traj.size());
  for (const TrajectorySample& s : traj) {
    out.push_back({s.t, dim_a == 1 ? s.rho : partial_trace_ancilla(s.rho, dim_s, dim_a)});
  }
  return out;
}

MaxProbability sample_peak(const std::vector<StateSample>& samples, int k) {
  MaxProbability best{0.0, -1.0};
  for (const StateSample& s : samples) {
    const double p = s.rho(k, k).real();
    if (p > best.p_star) best = {s.t, p};
  }
  return best;
}

std::string cell_name(int n_s, int n_a, std::uint64_t seed) {
  std::ostringstream s;
  s << "cell (n_s=" << n_s << ", n_a=" << n_a << ", seed=" << seed << ")";
  return s.str();
}

}  // namespace

ComplexMatrix ancilla_density(const AncillaStateSpec& spec, int n, std::uint64_t seed) {
  const int d = n + 1;
  switch (spec.kind) {
    case AncillaStateSpec::Kind::left: return projector(basis_vector(d, n));
    case AncillaStateSpec::Kind::right: return projector(basis_vector(d, 0));
    case AncillaStateSpec::Kind::mixed: return stationary_mix(n);
    case AncillaStateSpec::Kind::superposition:
      return projector(Eigen::VectorXcd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))));
    case AncillaStateSpec::Kind::amplitudes: {
      Eigen::VectorXcd psi(d);
      for (int k = 0; k < d; ++k) psi(k) = spec.amplitudes.at(k);
      return projector(psi);
    }
    case AncillaStateSpec::Kind::weights: {
      ComplexMatrix rho = ComplexMatrix::Zero(d, d);
      for (int k = 0; k < d; ++k) rho(k, k) = spec.weights.at(k);
      return rho;
    }
    case AncillaStateSpec::Kind::random: {
      std::mt19937_64 rng(seed);
      const ComplexMatrix b = random_factor(d, rng);
      const ComplexMatrix rho = b * b.adjoint();
      return rho / rho.trace().real();
    }
  }
  throw std::logic_error("ancilla_density: unhandled state kind");
}

// --- simulate -----------------------------------------------------------------

SimulationResult simulate(const ExperimentConfig& cfg) {
  const auto& it = cfg.integrator;
  const FockSpace fs(cfg.system.n);
  const ComplexMatrix hs = build_well_h(cfg.system, fs);
  const ComplexMatrix rho_s0 = localized_state(fs, cfg.system.n);
  const int ds = fs.dim();
  SimulationResult result;

  if (!cfg.noisy()) {
    const UnitaryPropagator bare(hs);
    const double dt_sample = it.dt * it.sample_every;
    const long count = step_count(it.horizon_T, dt_sample);
    Curve c{"bare", {}, {}};
    for (long j = 0; j <= count; ++j) {
      const double t = std::min(j * dt_sample, it.horizon_T);
      c.samples.push_back({t, bare.evolve(rho_s0, t)});
    }
    c.peak = find_max_probability(
        [&](double t) { return transfer_probability(bare.evolve(rho_s0, t), 0); }, it.horizon_T,
        cfg.evaluation.grid_points);
    result.bare = std::move(c);

    if (cfg.ancilla) {
      const AncillaConfig& a = *cfg.ancilla;
      const FockSpace fa(a.params.n);
      const ComplexMatrix h = build_joint_h(hs, build_well_h(a.params, fa),
                                            build_interaction(cfg.coupling.coupling, fs, fa));
      const ReducedDynamics dyn(rho_s0,
                                ancilla_density(a.state, a.params.n, cfg.optimizer.seed), h);
      Curve cc{"coupled", {}, {}};
      for (long j = 0; j <= count; ++j) {
        const double t = std::min(j * dt_sample, it.horizon_T);
        cc.samples.push_back({t, dyn.system_state(t)});
      }
      cc.peak = find_max_probability([&](double t) { return dyn.probability(t, 0); },
                                     it.horizon_T, cfg.evaluation.grid_points);
      result.coupled = std::move(cc);
    }
    return result;
  }

  const GateSpec open{it.horizon_T, GateKind::hard, it.dt};
  {
    const NoiseParams noise{cfg.noise.lambda_s, 0.0};
    Curve c{"bare", {}, {}};
    c.samples = reduce_samples(
        evolve_noisy(rho_s0, hs, noise, {ds, 1}, open, it.horizon_T, it.dt, it.sample_every), ds,
        1);
    c.peak = sample_peak(c.samples, 0);
    result.bare = std::move(c);
  }
  if (cfg.ancilla) {
    const AncillaConfig& a = *cfg.ancilla;
    const FockSpace fa(a.params.n);
    const ComplexMatrix h = build_joint_h(hs, build_well_h(a.params, fa),
                                          build_interaction(cfg.coupling.coupling, fs, fa));
    const ComplexMatrix rho0 =
        kron(rho_s0, ancilla_density(a.state, a.params.n, cfg.optimizer.seed));
    Curve c{"coupled", {}, {}};
    c.samples = reduce_samples(evolve_noisy(rho0, h, cfg.noise, {ds, fa.dim()}, open,
                                            it.horizon_T, it.dt, it.sample_every),
                               ds, fa.dim());
    c.peak = sample_peak(c.samples, 0);
    result.coupled = std::move(c);
  }
  return result;
}

// --- train --------------------------------------------------------------------

TrainSettings make_train_settings(const ExperimentConfig& cfg, int n_s, int n_a,
                                  std::uint64_t seed) {
  if (!cfg.ancilla) throw ConfigError("ancilla: required for training");
  const AncillaConfig& a = *cfg.ancilla;
  const bool noisy = cfg.noisy();
  const AncillaMode mode =
      cfg.optimizer.ancilla_mode.value_or(noisy ? AncillaMode::diagonal : AncillaMode::factor);

  TrainSettings s;
  s.objective.system = cfg.system;
  s.objective.system.n = n_s;
  s.objective.n_ancilla = n_a;
  s.objective.noisy = noisy;
  s.objective.noise = cfg.noise;
  s.objective.horizon_T = cfg.integrator.horizon_T;
  s.objective.dt = cfg.integrator.train_dt;
  s.objective.gate_temperature = cfg.integrator.gate_temperature;

  LearnVector v(n_a, mode, cfg.coupling.full);
  std::mt19937_64 rng(seed);
  switch (a.state.kind) {
    case AncillaStateSpec::Kind::random:
      if (mode == AncillaMode::factor) v.set_factor(random_factor(n_a + 1, rng));
      else v.set_weights(random_weights(n_a + 1, rng));
      break;
    case AncillaStateSpec::Kind::left:
      v.set_pure_ancilla(basis_vector(n_a + 1, n_a));
      break;
    case AncillaStateSpec::Kind::right:
      v.set_pure_ancilla(basis_vector(n_a + 1, 0));
      break;
    case AncillaStateSpec::Kind::superposition:
      v.set_pure_ancilla(Eigen::VectorXcd::Ones(n_a + 1));
      break;
    case AncillaStateSpec::Kind::amplitudes: {
      if (static_cast<int>(a.state.amplitudes.size()) != n_a + 1) {
        throw ConfigError("ancilla.state.amplitudes: length does not match the ancilla size " +
                          std::to_string(n_a));
      }
      Eigen::VectorXcd psi(n_a + 1);
      for (int k = 0; k <= n_a; ++k) psi(k) = a.state.amplitudes[k];
      v.set_pure_ancilla(psi);
      break;
    }
    case AncillaStateSpec::Kind::mixed:
    case AncillaStateSpec::Kind::weights: {
      RealVector p = RealVector::Constant(n_a + 1, 1.0 / (n_a + 1));
      if (a.state.kind == AncillaStateSpec::Kind::weights) {
        if (static_cast<int>(a.state.weights.size()) != n_a + 1) {
          throw ConfigError("ancilla.state.weights: length does not match the ancilla size " +
                            std::to_string(n_a));
        }
        for (int k = 0; k <= n_a; ++k) p(k) = a.state.weights[k];
      }
      const RealVector root = p.cwiseSqrt();
      if (mode == AncillaMode::factor) v.set_factor(root.cast<Complex>().asDiagonal());
      else v.set_weights(root);
      break;
    }
  }

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const auto init = [&](bool frozen, double configured) {
    return cfg.optimizer.random_init && !frozen ? uniform(rng) : configured;
  };
  v.eta_a = init(a.freeze_eta, a.params.eta);
  v.gamma_a = init(a.freeze_gamma, a.params.gamma);
  v.delta_a = init(a.freeze_delta, a.params.delta);
  if (cfg.coupling.full) {
    Eigen::Matrix3d m = cfg.coupling.coupling.coefficients();
    if (cfg.optimizer.random_init && !cfg.coupling.frozen) {
      for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = uniform(rng);
    }
    v.set_coupling(Coupling::matrix(m));
  } else {
    v.set_coupling(Coupling::scalar(init(cfg.coupling.frozen, cfg.coupling.coupling.alpha())));
  }
  const double t0 = init(cfg.time.frozen, cfg.time.t_hat);
  v.set_t_hat(t0 > 0.0 ? t0 : cfg.time.t_hat);

  v.freeze(ParamGroup::eta_a, a.freeze_eta);
  v.freeze(ParamGroup::gamma_a, a.freeze_gamma);
  v.freeze(ParamGroup::delta_a, a.freeze_delta);
  v.freeze(ParamGroup::alpha, cfg.coupling.frozen);
  v.freeze(ParamGroup::t_hat, cfg.time.frozen);
  v.freeze(ParamGroup::ancilla, a.freeze_state);

  s.initial = v;
  s.lr = cfg.optimizer.lr;
  s.max_iters = cfg.optimizer.max_iters;
  s.engine = cfg.optimizer.engine;
  s.project_diagonal = cfg.optimizer.project_diagonal.value_or(noisy);
  s.early_stop_tol = cfg.optimizer.early_stop_tol;
  s.early_stop_window = cfg.optimizer.early_stop_window;
  s.eval_dt = cfg.integrator.dt;
  s.window_T = cfg.evaluation.window_T;
  return s;
}

TrainOutcome train_cell(const ExperimentConfig& cfg, int n_s, int n_a, std::uint64_t seed) {
  TrainOutcome out;
  try {
    out.report = train(make_train_settings(cfg, n_s, n_a, seed));
  } catch (const NumericalError& e) {
    throw NumericalError(cell_name(n_s, n_a, seed) + ": " + e.what());
  }
  const TrainReport& r = out.report;
  const LearnVector& v = r.final_vector;
  const bool normalized = cfg.evaluation.normalize && !cfg.noisy() && r.normalization_divisor > 0;
  out.row = {n_s,       n_a,       r.p_star,   normalized ? r.normalized_t_star : r.t_star,
             v.eta_a,   v.gamma_a, v.delta_a,  v.alpha(),
             r.iterations, seed};
  return out;
}

std::vector<TrainOutcome> run_sweep_cells(const ExperimentConfig& cfg, int workers) {
  if (!cfg.sweep) throw ConfigError("sweep: required for a sweep run");
  std::vector<std::tuple<int, int, std::uint64_t>> cells;
  for (int ns : cfg.sweep->n_s) {
    for (int na : cfg.sweep->n_a) {
      for (std::uint64_t seed : cfg.sweep->seeds) cells.emplace_back(ns, na, seed);
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  std::vector<TrainOutcome> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::size_t failed_index = cells.size();
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const auto [ns, na, seed] = cells[i];
        results[i] = train_cell(cfg, ns, na, seed);
      } catch (...) {
        // Keep the lowest-index failure so the reported error does not depend
        // on scheduling.
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };

  const int n_threads = std::clamp(workers, 1, static_cast<int>(cells.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::vector<StateSample> trained_trajectory(const ExperimentConfig& cfg,
                                            const TrainOutcome& outcome, double window_T,
                                            int points) {
  const TrainReport& r = outcome.report;
  const LearnVector& v = r.final_vector;
  ObjectiveSpec spec;
  spec.system = cfg.system;
  spec.system.n = outcome.row.n_s;
  spec.n_ancilla = outcome.row.n_a;
  const TunnelingObjective parts(spec);
  const int ds = parts.system_space().dim();
  const int da = parts.ancilla_space().dim();

  int stride = 1;
  const std::vector<double> times =
      time_grid(window_T, points, cfg.noisy(), cfg.integrator.dt, &stride);
  if (!cfg.noisy()) {
    const bool normalized = cfg.evaluation.normalize && r.normalization_divisor > 0.0;
    const ComplexMatrix h = normalized ? normalize_hamiltonian(parts, v) : parts.joint_h(v);
    const ReducedDynamics dyn(parts.system_initial_state(), r.rho_a, h);
    std::vector<StateSample> out;
    out.reserve(times.size());
    for (double t : times) out.push_back({t, dyn.system_state(t)});
    return out;
  }
  const ComplexMatrix rho0 = kron(parts.system_initial_state(), r.rho_a);
  const GateSpec open{times.back(), GateKind::hard, cfg.integrator.dt};
  return reduce_samples(evolve_noisy(rho0, parts.joint_h(v), cfg.noise, {ds, da}, open,
                                     times.back(), cfg.integrator.dt, stride),
                        ds, da);
}

std::vector<double> bare_curve(const ExperimentConfig& cfg, int n_s,
                               const std::vector<double>& times) {
  WellParams p = cfg.system;
  p.n = n_s;
  const FockSpace fs(n_s);
  const ComplexMatrix hs = build_well_h(p, fs);
  const ComplexMatrix rho0 = localized_state(fs, n_s);
  std::vector<double> out;
  if (times.empty()) return out;
  if (!cfg.noisy()) {
    const UnitaryPropagator u(hs);
    for (double t : times) out.push_back(transfer_probability(u.evolve(rho0, t), 0));
    return out;
  }
  const double dt = cfg.integrator.dt;
  const int stride =
      times.size() > 1 ? std::max(1, static_cast<int>(std::lround((times[1] - times[0]) / dt))) : 1;
  const GateSpec open{times.back(), GateKind::hard, dt};
  const auto traj = evolve_noisy(rho0, hs, {cfg.noise.lambda_s, 0.0}, {fs.dim(), 1}, open,
                                 times.back(), dt, stride);
  for (std::size_t i = 0; i < times.size() && i < traj.size(); ++i) {
    out.push_back(traj[i].rho(0, 0).real());
  }
  return out;
}

// --- oracle -------------------------------------------------------------------

OracleResult oracle_check(const ExperimentConfig& cfg) {
  if (cfg.noisy()) throw ConfigError("noise: oracle_check requires noiseless dynamics");
  const OracleConfig& oc = cfg.oracle;
  const double gamma_s = cfg.system.gamma / 2.0;  // Pauli convention
  const double delta_s = cfg.system.delta / 2.0;
  const FockSpace fs(1);
  const ComplexMatrix rho_s0 = localized_state(fs, 1);
  const ComplexMatrix hs = build_well_h({cfg.system.eta, cfg.system.gamma, cfg.system.delta, 1}, fs);

  OracleResult result;
  for (int n_a : oc.n_a) {
    const FockSpace fa(n_a);
    const ComplexMatrix ha = build_well_h({0.0, 0.0, cfg.system.delta, n_a}, fa);
    for (int c = 0; c < oc.cases; ++c) {
      std::seed_seq seq{static_cast<std::uint64_t>(cfg.optimizer.seed),
                        static_cast<std::uint64_t>(n_a), static_cast<std::uint64_t>(c)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> coupling(-2.0, 2.0);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> when(0.0, oc.t_max);

      closedform::SimpleLimitParams p;
      p.gamma = gamma_s;
      p.delta = delta_s;
      p.alpha = coupling(rng);
      p.n_ancilla = n_a;
      Eigen::VectorXcd psi(n_a + 1);
      for (int k = 0; k <= n_a; ++k) psi(k) = Complex(normal(rng), normal(rng));
      psi.normalize();
      for (int k = 0; k <= n_a; ++k) p.amplitudes.push_back(psi(k));

      const double alpha_j = closedform::to_j_convention(gamma_s, delta_s, p.alpha).alpha;
      const ComplexMatrix h =
          build_joint_h(hs, ha, build_interaction(Coupling::scalar(alpha_j), fs, fa));
      const ReducedDynamics dyn(rho_s0, psi * psi.adjoint(), h);
      for (int i = 0; i < oc.times; ++i) {
        const double t = when(rng);
        const double err = std::abs(dyn.probability(t, 0) - closedform::coupled_prob(p, t));
        result.max_error = std::max(result.max_error, err);
        ++result.evaluations;
      }
      ++result.cases;
    }
  }
  result.passed = result.max_error < oc.tolerance;
  return result;
}

// --- orchestration ------------------------------------------------------------

std::string render_curves(const CsvTable& table, const std::string& title) {
  std::vector<Series> series;
  const std::vector<double> t = table.column_values("t");
  for (const std::string& name : table.header) {
    if (name == "t") continue;
    series.push_back({name, t, table.column_values(name), name == "bare" ? "#d62728" : ""});
  }
  Axes axes;
  axes.title = title;
  axes.x_label = "t";
  axes.y_label = "P(L -> R)";
  axes.y_range = std::make_pair(0.0, 1.0);
  return render_svg(series, axes);
}

namespace {

struct Sink {
  std::filesystem::path dir;
  Manifest manifest;

  void csv(const std::string& name, const CsvTable& t) {
    write_csv(dir / name, t);
    manifest.artifacts.push_back(name);
  }
  void text(const std::string& name, const std::string& body) {
    write_text(dir / name, body);
    manifest.artifacts.push_back(name);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
};

json report_json(const TrainOutcome& o) {
  const TrainReport& r = o.report;
  std::vector<double> pops;
  for (Eigen::Index k = 0; k < r.rho_a.rows(); ++k) pops.push_back(r.rho_a(k, k).real());
  const Eigen::Matrix3d& a = r.final_vector.coupling().coefficients();
  json alpha = json::array();
  for (int i = 0; i < 3; ++i) alpha.push_back({a(i, 0), a(i, 1), a(i, 2)});
  return {{"n_s", o.row.n_s},
          {"n_a", o.row.n_a},
          {"seed", o.row.seed},
          {"p_star", r.p_star},
          {"t_star", o.row.t_star},
          {"t_hat", r.t_star},
          {"normalization_divisor", r.normalization_divisor},
          {"eta_a", o.row.eta_a},
          {"gamma_a", o.row.gamma_a},
          {"delta_a", o.row.delta_a},
          {"alpha", o.row.alpha},
          {"coupling_matrix", alpha},
          {"rho_a_populations", pops},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"final_loss", r.losses.empty() ? 1.0 : r.losses.back()},
          {"window_T", r.window_T},
          {"wall_seconds", r.wall_seconds}};
}

CsvTable loss_table(const TrainReport& r) {
  CsvTable t;
  t.header = {"t", "loss"};
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    t.rows.push_back({static_cast<double>(i), r.losses[i]});
  }
  return t;
}

void run_simulate(const ExperimentConfig& cfg, const RunOptions& opts, Sink& sink) {
  const SimulationResult sim = simulate(cfg);
  const bool rho = cfg.output.trajectory_rho;
  sink.csv("trajectory_bare.csv", trajectory_table(sim.bare.samples, 0, rho));
  CsvTable curves;
  curves.header = {"t", "bare"};
  for (const StateSample& s : sim.bare.samples) curves.rows.push_back({s.t, s.rho(0, 0).real()});
  json summary = {{"bare", {{"t_star", sim.bare.peak.t_star}, {"p_star", sim.bare.peak.p_star}}}};
  if (sim.coupled) {
    sink.csv("trajectory_coupled.csv", trajectory_table(sim.coupled->samples, 0, rho));
    curves.header.push_back("coupled");
    for (std::size_t i = 0; i < curves.rows.size(); ++i) {
      curves.rows[i].push_back(sim.coupled->samples.at(i).rho(0, 0).real());
    }
    summary["coupled"] = {{"t_star", sim.coupled->peak.t_star},
                          {"p_star", sim.coupled->peak.p_star}};
  }
  sink.csv("curves.csv", curves);
  sink.json_file("summary.json", summary);
  if (opts.plot) sink.text("curves.svg", render_curves(curves, "Tunneling probability"));
}

CsvTable curve_table(const ExperimentConfig& cfg, const std::vector<const TrainOutcome*>& runs,
                     double window_T, int points) {
  CsvTable table;
  table.header = {"t", "bare"};
  std::vector<std::vector<StateSample>> trajs;
  for (const TrainOutcome* o : runs) {
    trajs.push_back(trained_trajectory(cfg, *o, window_T, points));
    table.header.push_back("n_a_" + std::to_string(o->row.n_a));
  }
  std::vector<double> times;
  for (const StateSample& s : trajs.front()) times.push_back(s.t);
  const std::vector<double> bare = bare_curve(cfg, runs.front()->row.n_s, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i], bare.at(i)};
    for (const auto& traj : trajs) row.push_back(traj.at(i).rho(0, 0).real());
    table.rows.push_back(std::move(row));
  }
  return table;
}

double curve_window(const ExperimentConfig& cfg, const std::vector<const TrainOutcome*>& runs) {
  if (cfg.evaluation.window_T > 0.0) return cfg.evaluation.window_T;
  double w = 0.0;
  for (const TrainOutcome* o : runs) w = std::max(w, 2.0 * o->row.t_star);
  return w > 0.0 ? w : cfg.integrator.horizon_T;
}

void run_train(const ExperimentConfig& cfg, const RunOptions& opts, Sink& sink) {
  const int n_a = cfg.ancilla->params.n;
  const TrainOutcome o = train_cell(cfg, cfg.system.n, n_a, cfg.optimizer.seed);
  sink.csv("training_trace.csv", training_trace_table(o.report));
  const double window = curve_window(cfg, {&o});
  const auto traj = trained_trajectory(cfg, o, window, 400);
  sink.csv("trajectory.csv", trajectory_table(traj, 0, cfg.output.trajectory_rho));
  const CsvTable curves = curve_table(cfg, {&o}, window, 400);
  sink.csv("curves.csv", curves);
  json summary = report_json(o);
  summary["normalized"] = cfg.evaluation.normalize && !cfg.noisy();
  sink.json_file("summary.json", summary);
  if (opts.plot) {
    Axes axes;
    axes.title = "Training loss";
    axes.x_label = "iteration";
    axes.y_label = "1 - P";
    sink.text("training.svg",
              render_svg(series_from_table(loss_table(o.report), "t", {"loss"}), axes));
    sink.text("curves.svg", render_curves(curves, "Trained tunneling probability"));
  }
}

void run_sweep(const ExperimentConfig& cfg, const RunOptions& opts, Sink& sink) {
  const std::vector<TrainOutcome> outcomes = run_sweep_cells(cfg, opts.workers);
  std::vector<SweepRow> rows;
  json cells = json::array();
  for (const TrainOutcome& o : outcomes) {
    rows.push_back(o.row);
    cells.push_back(report_json(o));
    std::ostringstream name;
    name << "traces/ns" << o.row.n_s << "_na" << o.row.n_a << "_seed" << o.row.seed << ".csv";
    sink.csv(name.str(), training_trace_table(o.report));
  }
  sink.csv("sweep.csv", sweep_table(rows));
  sink.json_file("summary.json", {{"cells", cells}});

  // One figure per system size, using the smallest seed of each cell.
  const std::uint64_t seed0 = *std::min_element(cfg.sweep->seeds.begin(), cfg.sweep->seeds.end());
  std::vector<int> sizes = cfg.sweep->n_s;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (int ns : sizes) {
    std::vector<const TrainOutcome*> runs;
    for (const TrainOutcome& o : outcomes) {
      if (o.row.n_s == ns && o.row.seed == seed0) runs.push_back(&o);
    }
    if (runs.empty()) continue;
    const CsvTable curves = curve_table(cfg, runs, curve_window(cfg, runs), 400);
    const std::string base = "curves_ns" + std::to_string(ns);
    sink.csv(base + ".csv", curves);
    if (opts.plot) {
      sink.text(base + ".svg",
                render_curves(curves, "N_S = " + std::to_string(ns) + " with learned ancillas"));
    }
  }
}

void run_oracle(const ExperimentConfig& cfg, Sink& sink) {
  const OracleResult r = oracle_check(cfg);
  sink.json_file("summary.json", {{"max_error", r.max_error},
                                  {"cases", r.cases},
                                  {"evaluations", r.evaluations},
                                  {"tolerance", cfg.oracle.tolerance},
                                  {"passed", r.passed}});
  if (!r.passed) {
    std::ostringstream msg;
    msg << "max |simulated - closed form| = " << r.max_error << " exceeds tolerance "
        << cfg.oracle.tolerance;
    throw NumericalError(msg.str());
  }
}

}  // namespace

Manifest run(const ExperimentConfig& cfg, const RunOptions& opts) {
  Sink sink;
  sink.dir = cfg.output.dir;
  sink.manifest.mode = to_string(cfg.mode);
  sink.manifest.config_hash = config_hash(cfg);
  sink.manifest.seed = cfg.optimizer.seed;
  sink.manifest.version = library_version();
  std::filesystem::create_directories(sink.dir);

  try {
    switch (cfg.mode) {
      case Mode::simulate: run_simulate(cfg, opts, sink); break;
      case Mode::train: run_train(cfg, opts, sink); break;
      case Mode::sweep: run_sweep(cfg, opts, sink); break;
      case Mode::oracle_check: run_oracle(cfg, sink); break;
    }
  } catch (const NumericalError& e) {
    sink.manifest.status = "failed";
    write_manifest(sink.dir / "manifest.json", sink.manifest);
    throw NumericalError(to_string(cfg.mode) + ": " + e.what());
  }
  write_manifest(sink.dir / "manifest.json", sink.manifest);
  return sink.manifest;
}

}  // namespace tunnelcat
