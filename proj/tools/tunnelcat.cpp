#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tunnelcat/config.hpp"
#include "tunnelcat/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  if (const char* level = std::getenv("TUNNELCAT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

struct RunFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  int workers = 1;
  bool plot = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Config file, or the name of a bundled preset")
      ->required();
  cmd->add_option("--out", f.out, "Output directory (overrides output.dir)");
  cmd->add_option("--seed", f.seed, "Random seed (overrides optimizer.seed and sweep seeds)");
  cmd->add_option("--workers", f.workers, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  cmd->add_flag("--plot", f.plot, "Also write SVG plots");
  cmd->add_option("--dt", f.dt, "Integrator step (overrides integrator.dt)");
}

int execute(tunnelcat::Mode mode, const RunFlags& f) {
  using namespace tunnelcat;
  ExperimentConfig cfg;
  RunOptions opts;
  try {
    const auto path = resolve_config(f.config);
    spdlog::debug("loading {}", path.string());
    cfg = load_config(path);
    if (cfg.mode != mode) {
      throw ConfigError("mode: config describes a " + to_string(cfg.mode) +
                        " run but the subcommand is " + to_string(mode));
    }
    if (!f.out.empty()) opts.out_dir = f.out;
    opts.seed = f.seed;
    opts.dt = f.dt;
    opts.workers = f.workers;
    opts.plot = f.plot;
    apply_overrides(cfg, opts);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  }

  spdlog::info("{} run, config hash {}, seed {}, output {}", to_string(cfg.mode),
               config_hash(cfg), cfg.optimizer.seed, cfg.output.dir);
  try {
    const Manifest m = run(cfg, opts);
    for (const std::string& a : m.artifacts) spdlog::debug("wrote {}", a);
    spdlog::info("done: {} artifacts in {}", m.artifacts.size() + 1, cfg.output.dir);
    std::cout << (std::filesystem::path(cfg.output.dir) / "summary.json").string() << "\n";
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return kExitOk;
}

int replot(const std::string& csv, const std::string& svg, const std::string& title) {
  try {
    const tunnelcat::CsvTable table = tunnelcat::read_csv(csv);
    tunnelcat::write_text(svg, tunnelcat::render_curves(table, title));
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Catalyzed tunneling in two-mode boson systems: simulate, train, sweep"};
  app.set_version_flag("--version", tunnelcat::library_version());
  app.require_subcommand(1);

  RunFlags sim, trn, swp, orc;
  auto* c_sim = app.add_subcommand("simulate", "P(t) of the bare and coupled system");
  add_run_flags(c_sim, sim);
  auto* c_trn = app.add_subcommand("train", "Learn ancilla parameters for one configuration");
  add_run_flags(c_trn, trn);
  auto* c_swp = app.add_subcommand("sweep", "Train over a grid of system and ancilla sizes");
  add_run_flags(c_swp, swp);
  auto* c_orc = app.add_subcommand("oracle-check", "Compare the simulator with closed forms");
  add_run_flags(c_orc, orc);

  std::string csv, svg, title;
  auto* c_plot = app.add_subcommand("plot", "Render a curves CSV (t plus P columns) as SVG");
  c_plot->add_option("csv", csv, "Input CSV")->required();
  c_plot->add_option("svg", svg, "Output SVG")->required();
  c_plot->add_option("--title", title, "Plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  using tunnelcat::Mode;
  if (*c_sim) return execute(Mode::simulate, sim);
  if (*c_trn) return execute(Mode::train, trn);
  if (*c_swp) return execute(Mode::sweep, swp);
  if (*c_orc) return execute(Mode::oracle_check, orc);
  if (*c_plot) return replot(csv, svg, title);
  return kExitConfig;
}
