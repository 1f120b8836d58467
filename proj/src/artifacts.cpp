#include "tunnelcat/artifacts.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace tunnelcat {

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::column_values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.at(c));
  return out;
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  char buf[64];
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("format_csv: row width does not match the header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, row[i]);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("parse_csv: empty input");
  {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) t.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw std::invalid_argument("parse_csv: bad number '" + cell + "' on line " +
                                    std::to_string(lineno));
      }
      row.push_back(x);
    }
    if (row.size() != t.header.size()) {
      throw std::invalid_argument("parse_csv: line " + std::to_string(lineno) + " has " +
                                  std::to_string(row.size()) + " fields, expected " +
                                  std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text(path, format_csv(table));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_csv(text.str());
}

CsvTable trajectory_table(const std::vector<StateSample>& samples, int k_target,
                          bool include_rho) {
  CsvTable t;
  t.header = {"t", "P_target", "trace", "min_eig"};
  const Eigen::Index dim = samples.empty() ? 0 : samples.front().rho.rows();
  if (include_rho) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const std::string base = "rho_" + std::to_string(i) + "_" + std::to_string(j);
        t.header.push_back(base + "_re");
        t.header.push_back(base + "_im");
      }
    }
  }
  for (const StateSample& s : samples) {
    std::vector<double> row{s.t, s.rho(k_target, k_target).real(), s.rho.trace().real(),
                            min_eigenvalue(s.rho)};
    if (include_rho) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
          row.push_back(s.rho(i, j).real());
          row.push_back(s.rho(i, j).imag());
        }
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable training_trace_table(const TrainReport& report) {
  CsvTable t;
  t.header = {"iter", "loss", "eta_a", "gamma_a", "delta_a", "alpha", "t_hat", "trace_rho_a"};
  for (std::size_t i = 0; i < report.losses.size(); ++i) {
    const ParamSnapshot& s = report.snapshots.at(i);
    t.rows.push_back({static_cast<double>(i), report.losses[i], s.eta_a, s.gamma_a, s.delta_a,
                      s.alpha, s.t_hat, s.trace_rho_a});
  }
  return t;
}

CsvTable sweep_table(std::vector<SweepRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.n_s, a.n_a, a.seed) < std::tie(b.n_s, b.n_a, b.seed);
  });
  CsvTable t;
  t.header = {"n_s",     "n_a",     "p_star", "t_star",     "eta_a",
              "gamma_a", "delta_a", "alpha",  "iterations", "seed"};
  for (const SweepRow& r : rows) {
    t.rows.push_back({static_cast<double>(r.n_s), static_cast<double>(r.n_a), r.p_star, r.t_star,
                      r.eta_a, r.gamma_a, r.delta_a, r.alpha, static_cast<double>(r.iterations),
                      static_cast<double>(r.seed)});
  }
  return t;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  const nlohmann::json j = {{"mode", m.mode},
                            {"config_hash", m.config_hash},
                            {"seed", m.seed},
                            {"version", m.version},
                            {"status", m.status},
                            {"artifacts", m.artifacts}};
  write_text(path, j.dump(2) + "\n");
}

}  // namespace tunnelcat
