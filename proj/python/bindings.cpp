#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tunnelcat/closedform.hpp"
#include "tunnelcat/config.hpp"
#include "tunnelcat/dynamics.hpp"
#include "tunnelcat/experiment.hpp"
#include "tunnelcat/fock.hpp"
#include "tunnelcat/model.hpp"

namespace py = pybind11;
using namespace tunnelcat;

namespace {

py::dict row_dict(const SweepRow& r) {
  py::dict d;
  d["n_s"] = r.n_s;
  d["n_a"] = r.n_a;
  d["p_star"] = r.p_star;
  d["t_star"] = r.t_star;
  d["eta_a"] = r.eta_a;
  d["gamma_a"] = r.gamma_a;
  d["delta_a"] = r.delta_a;
  d["alpha"] = r.alpha;
  d["iterations"] = r.iterations;
  d["seed"] = r.seed;
  return d;
}

py::dict curve_dict(const Curve& c) {
  std::vector<double> t, p;
  for (const auto& s : c.samples) {
    t.push_back(s.t);
    p.push_back(transfer_probability(s.rho, 0));
  }
  py::dict d;
  d["label"] = c.label;
  d["t"] = t;
  d["p"] = p;
  d["t_star"] = c.peak.t_star;
  d["p_star"] = c.peak.p_star;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tunneling of bosons in a double well coupled to a learnable ancilla.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("version", &library_version);

  // Fock space and Hamiltonians.
  py::class_<FockSpace>(m, "FockSpace")
      .def(py::init<int>(), py::arg("n_particles"))
      .def_property_readonly("n_particles", &FockSpace::n_particles)
      .def_property_readonly("dim", &FockSpace::dim)
      .def_property_readonly("jx", &FockSpace::jx)
      .def_property_readonly("jy", &FockSpace::jy)
      .def_property_readonly("jz", &FockSpace::jz);

  m.def("localized_state", &localized_state, py::arg("space"), py::arg("k"),
        "Density matrix |k><k| with k bosons in the left well.");
  m.def("kron", &kron);
  m.def("partial_trace_ancilla", &partial_trace_ancilla, py::arg("rho_sa"), py::arg("dim_s"),
        py::arg("dim_a"));

  m.def(
      "well_hamiltonian",
      [](double eta, double gamma, double delta, int n) {
        return build_well_h(WellParams{eta, gamma, delta, n}, FockSpace(n));
      },
      py::arg("eta"), py::arg("gamma"), py::arg("delta"), py::arg("n"),
      "eta Jz^2 - gamma Jx - delta Jz.");
  m.def(
      "joint_hamiltonian",
      [](const ComplexMatrix& hs, const ComplexMatrix& ha, double alpha) {
        const int ns = static_cast<int>(hs.rows()) - 1;
        const int na = static_cast<int>(ha.rows()) - 1;
        auto hint = build_interaction(Coupling::scalar(alpha), FockSpace(ns), FockSpace(na));
        return build_joint_h(hs, ha, hint);
      },
      py::arg("h_s"), py::arg("h_a"), py::arg("alpha"),
      "H_S x I + I x H_A + alpha Jz x Jz.");

  // Dynamics.
  m.def("propagate", &propagate, py::arg("rho0"), py::arg("h"), py::arg("t"));
  m.def("reduced_system_state", &reduced_system_state, py::arg("rho_s0"), py::arg("rho_a0"),
        py::arg("h_sa"), py::arg("t"), py::arg("dim_s"), py::arg("dim_a"));
  m.def("transfer_probability", &transfer_probability, py::arg("rho_s"),
        py::arg("k_target") = 0);
  m.def(
      "find_max_probability",
      [](const std::function<double(double)>& f, double window_T, int grid_points) {
        auto r = find_max_probability(f, window_T, grid_points);
        return py::make_tuple(r.t_star, r.p_star);
      },
      py::arg("probability"), py::arg("window_T"), py::arg("grid_points") = 4000,
      "Returns (t_star, p_star).");

  // Closed forms.
  auto cf = m.def_submodule("closedform");
  cf.def("single_particle_prob", &closedform::single_particle_prob, py::arg("gamma"),
         py::arg("delta"), py::arg("t"));
  cf.def(
      "coupled_prob",
      [](double gamma, double delta, double alpha, std::vector<Complex> amplitudes,
         double t) {
        closedform::SimpleLimitParams p;
        p.gamma = gamma;
        p.delta = delta;
        p.alpha = alpha;
        p.n_ancilla = static_cast<int>(amplitudes.size()) - 1;
        p.amplitudes = std::move(amplitudes);
        return closedform::coupled_prob(p, t);
      },
      py::arg("gamma"), py::arg("delta"), py::arg("alpha"), py::arg("amplitudes"),
      py::arg("t"));
  cf.def("optimal_k_star", &closedform::optimal_k_star, py::arg("delta"), py::arg("alpha"),
         py::arg("n"));
  cf.def("maximizing_time", &closedform::maximizing_time, py::arg("omega"),
         py::arg("l") = 0);

  // Experiments.
  py::class_<ExperimentConfig>(m, "Config")
      .def_property_readonly("mode", [](const ExperimentConfig& c) { return to_string(c.mode); })
      .def_property_readonly("noisy", &ExperimentConfig::noisy)
      .def_property(
          "output_dir", [](const ExperimentConfig& c) { return c.output.dir; },
          [](ExperimentConfig& c, const std::string& d) { c.output.dir = d; })
      .def("canonical_json", [](const ExperimentConfig& c) { return canonical_json(c); })
      .def("hash", [](const ExperimentConfig& c) { return config_hash(c); });

  m.def("parse_config", &parse_config, py::arg("json_text"));
  m.def(
      "load_config",
      [](const std::string& name_or_path) { return load_config(resolve_config(name_or_path)); },
      py::arg("name_or_path"), "Load a config file or a bundled preset by name.");

  m.def(
      "simulate",
      [](const ExperimentConfig& cfg) {
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = simulate(cfg);
        }
        py::dict d;
        d["bare"] = curve_dict(r.bare);
        d["coupled"] = r.coupled ? py::object(curve_dict(*r.coupled)) : py::none();
        return d;
      },
      py::arg("config"));

  m.def(
      "train_cell",
      [](const ExperimentConfig& cfg, int n_s, int n_a, std::uint64_t seed) {
        TrainOutcome out = [&] {
          py::gil_scoped_release release;
          return train_cell(cfg, n_s, n_a, seed);
        }();
        py::dict d = row_dict(out.row);
        d["losses"] = out.report.losses;
        d["t_hat"] = out.report.final_vector.t_hat();
        d["rho_a"] = out.report.rho_a;
        d["converged"] = out.report.converged;
        return d;
      },
      py::arg("config"), py::arg("n_s"), py::arg("n_a"), py::arg("seed") = 0);

  m.def(
      "oracle_check",
      [](const ExperimentConfig& cfg) {
        OracleResult r;
        {
          py::gil_scoped_release release;
          r = oracle_check(cfg);
        }
        py::dict d;
        d["max_error"] = r.max_error;
        d["cases"] = r.cases;
        d["evaluations"] = r.evaluations;
        d["passed"] = r.passed;
        return d;
      },
      py::arg("config"));

  m.def(
      "run",
      [](const ExperimentConfig& cfg, std::optional<std::filesystem::path> out_dir,
         std::optional<std::uint64_t> seed, int workers, bool plot) {
        RunOptions opts;
        opts.out_dir = std::move(out_dir);
        opts.seed = seed;
        opts.workers = workers;
        opts.plot = plot;
        ExperimentConfig c = cfg;
        apply_overrides(c, opts);
        Manifest man = [&] {
          py::gil_scoped_release release;
          return run(c, opts);
        }();
        py::dict d;
        d["mode"] = man.mode;
        d["config_hash"] = man.config_hash;
        d["seed"] = man.seed;
        d["version"] = man.version;
        d["status"] = man.status;
        d["artifacts"] = man.artifacts;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(),
      py::arg("workers") = 1, py::arg("plot") = false,
      "Run the configured experiment and write its artifacts; returns the manifest.");
}
