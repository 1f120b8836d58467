#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tunnelcat/learn.hpp"
#include "tunnelcat/lindblad.hpp"
#include "tunnelcat/model.hpp"

namespace tunnelcat {

/// Schema violation, unreadable file or contradictory settings. The message
/// names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { simulate, train, sweep, oracle_check };

struct AncillaStateSpec {
  enum class Kind { left, right, random, mixed, superposition, amplitudes, weights };
  Kind kind = Kind::random;
  std::vector<Complex> amplitudes;  // Kind::amplitudes
  std::vector<double> weights;      // Kind::weights (populations, renormalized)
};

struct AncillaConfig {
  WellParams params{1.0, 1.0, 1.0, 1};  // initial values when training
  AncillaStateSpec state;
  bool freeze_eta = false;
  bool freeze_gamma = false;
  bool freeze_delta = false;
  bool freeze_state = false;
};

struct CouplingConfig {
  bool full = false;  // learn all nine alpha_ij instead of the (z, z) entry
  Coupling coupling = Coupling::scalar(1.0);
  bool frozen = false;
};

struct IntegratorConfig {
  double dt = 0.01;        // simulation and final noisy evaluation
  double train_dt = 0.05;  // noisy training
  double horizon_T = 20.0;
  int sample_every = 10;
  double gate_temperature = 0.0;  // 0 means "use train_dt"
};

struct TimeConfig {
  double t_hat = 1.0;
  bool frozen = false;
};

struct OptimizerConfig {
  double lr = 0.01;
  int max_iters = 2000;
  std::uint64_t seed = 0;
  GradientEngine engine = GradientEngine::finite_diff;
  std::optional<AncillaMode> ancilla_mode;  // default: factor noiseless, diagonal noisy
  bool random_init = false;                 // draw unfrozen scalars from [0, 1)
  double early_stop_tol = 1e-9;
  int early_stop_window = 100;
  std::optional<bool> project_diagonal;     // default: on in noisy mode
};

struct EvaluationConfig {
  double window_T = 0.0;  // 0 picks a window from the run
  int grid_points = 4000;
  bool normalize = true;  // evaluate trained runs with H / max|learned param|
};

struct SweepConfig {
  std::vector<int> n_s;
  std::vector<int> n_a;
  std::vector<std::uint64_t> seeds{0};
};

struct OracleConfig {
  std::vector<int> n_a{1, 2, 3, 4, 5};
  int cases = 10;
  int times = 50;
  double t_max = 20.0;
  double tolerance = 1e-8;
};

struct OutputConfig {
  std::string dir = "out";
  bool trajectory_rho = false;  // append flattened rho entries to trajectory CSVs
};

struct ExperimentConfig {
  Mode mode = Mode::simulate;
  WellParams system;
  std::optional<AncillaConfig> ancilla;
  CouplingConfig coupling;
  NoiseParams noise;
  IntegratorConfig integrator;
  TimeConfig time;
  OptimizerConfig optimizer;
  EvaluationConfig evaluation;
  std::optional<SweepConfig> sweep;
  OracleConfig oracle;
  OutputConfig output;

  bool noisy() const { return noise.lambda_s > 0.0 || noise.lambda_a > 0.0; }
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sorted-key JSON of every semantic field (defaults filled, output excluded).
std::string canonical_json(const ExperimentConfig& cfg);
/// 64-bit FNV-1a of canonical_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Rejects contradictory combinations (e.g. noise with oracle_check).
void validate(const ExperimentConfig& cfg);

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

}  // namespace tunnelcat
