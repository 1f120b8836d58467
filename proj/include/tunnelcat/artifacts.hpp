#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tunnelcat/learn.hpp"
#include "tunnelcat/types.hpp"

namespace tunnelcat {

/// Numeric table with a header row. Values are written with 17 significant
/// digits so a write/read cycle is exact.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws std::out_of_range if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

std::string format_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Reduced system state at one instant.
struct StateSample {
  double t;
  ComplexMatrix rho;
};

/// Columns t, P_target, trace, min_eig, then rho_i_j_re, rho_i_j_im when
/// `include_rho` is set.
CsvTable trajectory_table(const std::vector<StateSample>& samples, int k_target,
                          bool include_rho);

/// Columns iter, loss, eta_a, gamma_a, delta_a, alpha, t_hat, trace_rho_a.
CsvTable training_trace_table(const TrainReport& report);

struct SweepRow {
  int n_s = 0;
  int n_a = 0;
  double p_star = 0.0;
  double t_star = 0.0;
  double eta_a = 0.0;
  double gamma_a = 0.0;
  double delta_a = 0.0;
  double alpha = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
};

/// Rows sorted by (n_s, n_a, seed). Columns n_s, n_a, p_star, t_star, eta_a,
/// gamma_a, delta_a, alpha, iterations, seed.
CsvTable sweep_table(std::vector<SweepRow> rows);

struct Manifest {
  std::string mode;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string status = "ok";
  std::vector<std::string> artifacts;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);

/// Writes `text` to `path`, creating parent directories. Throws
/// std::runtime_error when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace tunnelcat
