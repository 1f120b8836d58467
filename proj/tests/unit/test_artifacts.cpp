#include <filesystem>
#include <random>

#include "doctest.h"
#include "tunnelcat/artifacts.hpp"
#include "tunnelcat/experiment.hpp"
#include "tunnelcat/svg.hpp"

using namespace tunnelcat;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tunnelcat_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("artifacts") {
  TEST_CASE("CSV write and read is exact") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1e3);
    CsvTable t;
    t.header = {"t", "a", "b"};
    for (int i = 0; i < 50; ++i) t.rows.push_back({0.1 * i, g(rng), 1e-300 * g(rng)});
    const auto path = scratch("exact.csv");
    write_csv(path, t);
    const CsvTable back = read_csv(path);
    CHECK(back.header == t.header);
    CHECK(back.rows == t.rows);
  }

  TEST_CASE("CSV parse errors") {
    CHECK_THROWS_AS(parse_csv(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_csv("a\nx\n"), std::invalid_argument);
  }

  TEST_CASE("column layouts") {
    TrainReport r;
    r.losses = {0.5, 0.25};
    r.snapshots = {{1, 2, 3, 4, 5, 1}, {1, 2, 3, 4, 5, 1}};
    CHECK(training_trace_table(r).header ==
          std::vector<std::string>{"iter", "loss", "eta_a", "gamma_a", "delta_a", "alpha", "t_hat",
                                   "trace_rho_a"});
    CHECK(sweep_table({}).header ==
          std::vector<std::string>{"n_s", "n_a", "p_star", "t_star", "eta_a", "gamma_a", "delta_a",
                                   "alpha", "iterations", "seed"});
    const ComplexMatrix rho = ComplexMatrix::Identity(2, 2) / 2.0;
    const CsvTable plain = trajectory_table({{0.0, rho}}, 0, false);
    CHECK(plain.header == std::vector<std::string>{"t", "P_target", "trace", "min_eig"});
    CHECK(plain.rows[0][1] == 0.5);
    CHECK(trajectory_table({{0.0, rho}}, 0, true).header.size() == 4 + 8);
  }

  TEST_CASE("sweep rows are sorted by key") {
    std::vector<SweepRow> rows(3);
    rows[0].n_s = 4; rows[0].n_a = 2;
    rows[1].n_s = 3; rows[1].n_a = 5;
    rows[2].n_s = 3; rows[2].n_a = 2; rows[2].seed = 1;
    const CsvTable t = sweep_table(rows);
    CHECK(t.rows[0][0] == 3); CHECK(t.rows[0][1] == 2);
    CHECK(t.rows[1][0] == 3); CHECK(t.rows[1][1] == 5);
    CHECK(t.rows[2][0] == 4);
  }

  TEST_CASE("constant series draws a horizontal line across the time axis") {
    const Series s{"flat", {0.0, 1.0, 2.0, 3.0}, {0.4, 0.4, 0.4, 0.4}, ""};
    const std::string svg = render_svg({s}, Axes{});
    const auto start = svg.find("<polyline");
    REQUIRE(start != std::string::npos);
    const auto pts = svg.find("points=\"", start) + 8;
    const std::string points = svg.substr(pts, svg.find('"', pts) - pts);
    std::vector<std::string> ys;
    std::vector<double> xs;
    std::size_t pos = 0;
    while (pos < points.size()) {
      const auto comma = points.find(',', pos);
      const auto space = points.find(' ', comma);
      xs.push_back(std::stod(points.substr(pos, comma - pos)));
      ys.push_back(points.substr(comma + 1, (space == std::string::npos ? points.size() : space) - comma - 1));
      pos = space == std::string::npos ? points.size() : space + 1;
    }
    REQUIRE(ys.size() == 4);
    for (const auto& y : ys) CHECK(y == ys.front());
    CHECK(xs.front() < xs.back());
  }

  TEST_CASE("two series give two strokes and two legend entries") {
    const Series a{"first", {0, 1}, {0, 1}, ""};
    const Series b{"second", {0, 1}, {1, 0}, ""};
    const std::string svg = render_svg({a, b}, Axes{});
    CHECK(count(svg, "<polyline") == 2);
    CHECK(svg.find(">first<") != std::string::npos);
    CHECK(svg.find(">second<") != std::string::npos);
    CHECK(svg.find("stroke=\"#1f77b4\"") != std::string::npos);
    CHECK(svg.find("stroke=\"#2ca02c\"") != std::string::npos);
  }

  TEST_CASE("SVG errors") {
    CHECK_THROWS_AS(render_svg({}, Axes{}), std::invalid_argument);
    CHECK_THROWS_AS(render_svg({{"bad", {0, 1}, {0}, ""}}, Axes{}), std::invalid_argument);
    CHECK_THROWS_AS(emit_svg({{"s", {0, 1}, {0, 1}, ""}}, Axes{}, "/proc/forbidden/x.svg"),
                    std::runtime_error);
  }

  TEST_CASE("curves CSV re-ingested reproduces the identical SVG") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CsvTable t;
    t.header = {"t", "bare", "n_a_2", "n_a_3"};
    for (int i = 0; i < 300; ++i) t.rows.push_back({i * 0.0337, u(rng), u(rng), u(rng)});
    const std::string direct = render_curves(t, "round trip");
    const auto path = scratch("roundtrip.csv");
    write_csv(path, t);
    CHECK(render_curves(read_csv(path), "round trip") == direct);
    CHECK(direct.find("stroke=\"#d62728\"") != std::string::npos);
  }
}
