#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tunnelcat/artifacts.hpp"
#include "tunnelcat/config.hpp"
#include "tunnelcat/dynamics.hpp"
#include "tunnelcat/learn.hpp"
#include "tunnelcat/svg.hpp"

namespace tunnelcat {

std::string library_version();

/// An existing file path, else the bundled preset of that name (".json" optional).
std::filesystem::path resolve_config(const std::string& name_or_path);

/// Command-line overrides applied on top of a loaded config.
struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  int workers = 1;
  bool plot = false;
};

void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts);

/// Initial ancilla density matrix described by a config state.
ComplexMatrix ancilla_density(const AncillaStateSpec& spec, int n, std::uint64_t seed);

// --- simulate ---------------------------------------------------------------

struct Curve {
  std::string label;
  std::vector<StateSample> samples;  // reduced system state
  MaxProbability peak;               // over the simulated window
};

struct SimulationResult {
  Curve bare;
  std::optional<Curve> coupled;
};

/// P(t) of the bare system and, when an ancilla is configured, of the coupled
/// system. Noiseless runs propagate exactly; noisy runs integrate the GKSL
/// equation with step integrator.dt.
SimulationResult simulate(const ExperimentConfig& cfg);

// --- train / sweep ------------------------------------------------------------

TrainSettings make_train_settings(const ExperimentConfig& cfg, int n_s, int n_a,
                                  std::uint64_t seed);

struct TrainOutcome {
  TrainReport report;
  SweepRow row;
};

/// Trains one (N_S, N_A, seed) cell and evaluates the result. The reported
/// t_star is t_hat times the normalization divisor when evaluation.normalize
/// is set, i.e. the time of maximum under the normalized Hamiltonian.
TrainOutcome train_cell(const ExperimentConfig& cfg, int n_s, int n_a, std::uint64_t seed);

/// All (n_s, n_a, seed) cells of a sweep on a pool of `workers` threads.
/// Rows come back sorted by (n_s, n_a, seed) whatever the scheduling.
std::vector<TrainOutcome> run_sweep_cells(const ExperimentConfig& cfg, int workers);

/// Reduced-state trajectory of a trained configuration on [0, window_T] with
/// about `points` samples. Noiseless runs use the normalized Hamiltonian when
/// evaluation.normalize is set; noisy runs integrate at integrator.dt.
std::vector<StateSample> trained_trajectory(const ExperimentConfig& cfg,
                                            const TrainOutcome& outcome, double window_T,
                                            int points);

/// Bare-system P(t) at the given times (noisy runs: GKSL at integrator.dt,
/// sampled on the integrator grid nearest to each time).
std::vector<double> bare_curve(const ExperimentConfig& cfg, int n_s,
                               const std::vector<double>& times);

// --- oracle check -------------------------------------------------------------

struct OracleResult {
  double max_error = 0.0;
  int cases = 0;
  int evaluations = 0;
  bool passed = false;
};

/// Compares the simulator against the closed-form one-boson probability with a
/// non-tunneling ancilla, for random couplings and ancilla amplitudes.
OracleResult oracle_check(const ExperimentConfig& cfg);

// --- orchestration ------------------------------------------------------------

/// Writes the mode's CSV artifacts, optional SVG plots and manifest.json into
/// cfg.output.dir. Returns the manifest. Numerical failures are rethrown as
/// NumericalError naming the failing sub-experiment.
Manifest run(const ExperimentConfig& cfg, const RunOptions& opts);

/// Line plot of every non-"t" column against "t"; a column named "bare" is
/// drawn in red. Used both when running and when re-plotting a CSV.
std::string render_curves(const CsvTable& table, const std::string& title);

}  // namespace tunnelcat
