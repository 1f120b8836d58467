#include "tunnelcat/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tunnelcat {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(prefix, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, _] : obj.items()) {
    if (!keys.count(k)) fail(join(prefix, k), "unknown key");
  }
}

double get_number(const json& obj, const std::string& prefix, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(prefix, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(join(prefix, key), "must be finite");
  return x;
}

long long get_int(const json& obj, const std::string& prefix, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(prefix, key), "expected an integer");
  return v.get<long long>();
}

bool get_bool(const json& obj, const std::string& prefix, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(join(prefix, key), "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& prefix, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(join(prefix, key), "expected a string");
  return v.get<std::string>();
}

std::vector<long long> get_int_list(const json& obj, const std::string& prefix, const char* key) {
  const std::string name = join(prefix, key);
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) fail(name, "expected a non-empty list of integers");
  std::vector<long long> out;
  for (const json& e : v) {
    if (!e.is_number_integer()) fail(name, "expected a non-empty list of integers");
    out.push_back(e.get<long long>());
  }
  return out;
}

int particle_count(const json& obj, const std::string& prefix, int fallback) {
  const long long n = get_int(obj, prefix, "n", fallback);
  if (n < 1) fail(join(prefix, "n"), "particle count must be >= 1");
  if (n > 64) fail(join(prefix, "n"), "particle count must be <= 64");
  return static_cast<int>(n);
}

void require_positive(double x, const std::string& key) {
  if (!(x > 0.0)) fail(key, "must be > 0");
}

void require_nonnegative(double x, const std::string& key) {
  if (x < 0.0) fail(key, "must be >= 0");
}

WellParams parse_well(const json& obj, const std::string& prefix, WellParams defaults) {
  WellParams p = defaults;
  p.n = particle_count(obj, prefix, defaults.n);
  p.eta = get_number(obj, prefix, "eta", defaults.eta);
  p.gamma = get_number(obj, prefix, "gamma", defaults.gamma);
  p.delta = get_number(obj, prefix, "delta", defaults.delta);
  return p;
}

AncillaStateSpec parse_state(const json& v, const std::string& key, int n) {
  AncillaStateSpec s;
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (name == "left") s.kind = AncillaStateSpec::Kind::left;
    else if (name == "right") s.kind = AncillaStateSpec::Kind::right;
    else if (name == "random") s.kind = AncillaStateSpec::Kind::random;
    else if (name == "mixed") s.kind = AncillaStateSpec::Kind::mixed;
    else if (name == "superposition") s.kind = AncillaStateSpec::Kind::superposition;
    else fail(key, "unknown state '" + name + "' (left|right|random|mixed|superposition)");
    return s;
  }
  if (!v.is_object()) fail(key, "expected a state name or an object");
  reject_unknown(v, key, {"amplitudes", "weights"});
  if (v.contains("amplitudes") == v.contains("weights")) {
    fail(key, "give exactly one of amplitudes or weights");
  }
  if (v.contains("amplitudes")) {
    const std::string k = key + ".amplitudes";
    const json& a = v.at("amplitudes");
    if (!a.is_array() || static_cast<int>(a.size()) != n + 1) {
      fail(k, "expected " + std::to_string(n + 1) + " entries");
    }
    double norm = 0.0;
    for (const json& e : a) {
      Complex z;
      if (e.is_number()) {
        z = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        z = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        fail(k, "entries must be numbers or [re, im] pairs");
      }
      norm += std::norm(z);
      s.amplitudes.push_back(z);
    }
    if (!(norm > 0.0)) fail(k, "amplitudes must not all vanish");
    for (Complex& z : s.amplitudes) z /= std::sqrt(norm);
    s.kind = AncillaStateSpec::Kind::amplitudes;
  } else {
    const std::string k = key + ".weights";
    const json& w = v.at("weights");
    if (!w.is_array() || static_cast<int>(w.size()) != n + 1) {
      fail(k, "expected " + std::to_string(n + 1) + " entries");
    }
    double total = 0.0;
    for (const json& e : w) {
      if (!e.is_number() || e.get<double>() < 0.0) fail(k, "entries must be numbers >= 0");
      total += e.get<double>();
      s.weights.push_back(e.get<double>());
    }
    if (!(total > 0.0)) fail(k, "weights must not all vanish");
    for (double& x : s.weights) x /= total;
    s.kind = AncillaStateSpec::Kind::weights;
  }
  return s;
}

AncillaConfig parse_ancilla(const json& obj) {
  const std::string p = "ancilla";
  reject_unknown(obj, p, {"n", "eta", "gamma", "delta", "state", "frozen"});
  AncillaConfig a;
  a.params = parse_well(obj, p, a.params);
  if (obj.contains("state")) a.state = parse_state(obj.at("state"), "ancilla.state", a.params.n);
  if (obj.contains("frozen")) {
    const json& f = obj.at("frozen");
    reject_unknown(f, "ancilla.frozen", {"eta", "gamma", "delta", "state"});
    a.freeze_eta = get_bool(f, "ancilla.frozen", "eta", false);
    a.freeze_gamma = get_bool(f, "ancilla.frozen", "gamma", false);
    a.freeze_delta = get_bool(f, "ancilla.frozen", "delta", false);
    a.freeze_state = get_bool(f, "ancilla.frozen", "state", false);
  }
  return a;
}

CouplingConfig parse_coupling(const json& obj) {
  const std::string p = "coupling";
  reject_unknown(obj, p, {"alpha", "matrix", "frozen"});
  CouplingConfig c;
  if (obj.contains("alpha") && obj.contains("matrix")) {
    fail(p, "give either alpha or matrix, not both");
  }
  if (obj.contains("matrix")) {
    const json& m = obj.at("matrix");
    if (!m.is_array() || m.size() != 3) fail("coupling.matrix", "expected a 3x3 list");
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i) {
      if (!m[i].is_array() || m[i].size() != 3) fail("coupling.matrix", "expected a 3x3 list");
      for (int j = 0; j < 3; ++j) {
        if (!m[i][j].is_number()) fail("coupling.matrix", "entries must be numbers");
        a(i, j) = m[i][j].get<double>();
      }
    }
    c.coupling = Coupling::matrix(a);
    c.full = true;
  } else {
    c.coupling = Coupling::scalar(get_number(obj, p, "alpha", 1.0));
  }
  c.frozen = get_bool(obj, p, "frozen", false);
  return c;
}

GradientEngine parse_engine(const std::string& s) {
  if (s == "finite_diff") return GradientEngine::finite_diff;
  if (s == "forward_dual") return GradientEngine::forward_dual;
  fail("optimizer.engine", "expected finite_diff or forward_dual, got '" + s + "'");
}

AncillaMode parse_ancilla_mode(const std::string& s) {
  if (s == "factor") return AncillaMode::factor;
  if (s == "diagonal") return AncillaMode::diagonal;
  fail("optimizer.ancilla_mode", "expected factor or diagonal, got '" + s + "'");
}

std::string state_name(AncillaStateSpec::Kind k) {
  switch (k) {
    case AncillaStateSpec::Kind::left: return "left";
    case AncillaStateSpec::Kind::right: return "right";
    case AncillaStateSpec::Kind::random: return "random";
    case AncillaStateSpec::Kind::mixed: return "mixed";
    case AncillaStateSpec::Kind::superposition: return "superposition";
    case AncillaStateSpec::Kind::amplitudes: return "amplitudes";
    case AncillaStateSpec::Kind::weights: return "weights";
  }
  return "?";
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::train: return "train";
    case Mode::sweep: return "sweep";
    case Mode::oracle_check: return "oracle_check";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "simulate") return Mode::simulate;
  if (s == "train") return Mode::train;
  if (s == "sweep") return Mode::sweep;
  if (s == "oracle_check" || s == "oracle-check") return Mode::oracle_check;
  fail("mode", "expected simulate|train|sweep|oracle_check, got '" + s + "'");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  reject_unknown(root, "", {"mode", "system", "ancilla", "coupling", "noise", "integrator", "time",
                            "optimizer", "evaluation", "sweep", "oracle", "output"});
  ExperimentConfig cfg;
  if (!root.contains("mode")) fail("mode", "required");
  cfg.mode = parse_mode(get_string(root, "", "mode", ""));

  if (root.contains("system")) {
    const json& s = root.at("system");
    reject_unknown(s, "system", {"n", "eta", "gamma", "delta"});
    cfg.system = parse_well(s, "system", WellParams{1.0, 0.5, 1.0, 1});
  } else if (cfg.mode != Mode::oracle_check && cfg.mode != Mode::sweep) {
    fail("system", "required");
  } else {
    cfg.system = WellParams{1.0, 0.5, 1.0, 1};
  }

  if (root.contains("ancilla")) cfg.ancilla = parse_ancilla(root.at("ancilla"));
  if (root.contains("coupling")) cfg.coupling = parse_coupling(root.at("coupling"));

  if (root.contains("noise")) {
    const json& n = root.at("noise");
    reject_unknown(n, "noise", {"lambda_s", "lambda_a"});
    cfg.noise.lambda_s = get_number(n, "noise", "lambda_s", 0.0);
    cfg.noise.lambda_a = get_number(n, "noise", "lambda_a", 0.0);
    require_nonnegative(cfg.noise.lambda_s, "noise.lambda_s");
    require_nonnegative(cfg.noise.lambda_a, "noise.lambda_a");
  }

  if (root.contains("integrator")) {
    const json& g = root.at("integrator");
    const std::string p = "integrator";
    reject_unknown(g, p, {"dt", "train_dt", "horizon_T", "sample_every", "gate_temperature"});
    auto& it = cfg.integrator;
    it.dt = get_number(g, p, "dt", it.dt);
    it.train_dt = get_number(g, p, "train_dt", it.train_dt);
    it.horizon_T = get_number(g, p, "horizon_T", it.horizon_T);
    it.sample_every = static_cast<int>(get_int(g, p, "sample_every", it.sample_every));
    it.gate_temperature = get_number(g, p, "gate_temperature", it.gate_temperature);
  }
  require_positive(cfg.integrator.dt, "integrator.dt");
  require_positive(cfg.integrator.train_dt, "integrator.train_dt");
  require_positive(cfg.integrator.horizon_T, "integrator.horizon_T");
  if (cfg.integrator.sample_every < 1) fail("integrator.sample_every", "must be >= 1");
  require_nonnegative(cfg.integrator.gate_temperature, "integrator.gate_temperature");

  if (root.contains("time")) {
    const json& t = root.at("time");
    reject_unknown(t, "time", {"t_hat", "frozen"});
    cfg.time.t_hat = get_number(t, "time", "t_hat", cfg.time.t_hat);
    cfg.time.frozen = get_bool(t, "time", "frozen", false);
  }
  require_positive(cfg.time.t_hat, "time.t_hat");

  if (root.contains("optimizer")) {
    const json& o = root.at("optimizer");
    const std::string p = "optimizer";
    reject_unknown(o, p, {"lr", "max_iters", "seed", "engine", "ancilla_mode", "init",
                          "early_stop_tol", "early_stop_window", "project_diagonal"});
    auto& op = cfg.optimizer;
    op.lr = get_number(o, p, "lr", op.lr);
    op.max_iters = static_cast<int>(get_int(o, p, "max_iters", op.max_iters));
    const long long seed = get_int(o, p, "seed", 0);
    if (seed < 0) fail("optimizer.seed", "must be >= 0");
    op.seed = static_cast<std::uint64_t>(seed);
    op.engine = parse_engine(get_string(o, p, "engine", "finite_diff"));
    if (o.contains("ancilla_mode")) {
      op.ancilla_mode = parse_ancilla_mode(get_string(o, p, "ancilla_mode", ""));
    }
    const std::string init = get_string(o, p, "init", "ones");
    if (init != "ones" && init != "random") fail("optimizer.init", "expected ones or random");
    op.random_init = init == "random";
    op.early_stop_tol = get_number(o, p, "early_stop_tol", op.early_stop_tol);
    op.early_stop_window = static_cast<int>(get_int(o, p, "early_stop_window", op.early_stop_window));
    if (o.contains("project_diagonal")) {
      op.project_diagonal = get_bool(o, p, "project_diagonal", false);
    }
  }
  require_positive(cfg.optimizer.lr, "optimizer.lr");
  if (cfg.optimizer.max_iters < 1) fail("optimizer.max_iters", "must be >= 1");
  require_nonnegative(cfg.optimizer.early_stop_tol, "optimizer.early_stop_tol");
  if (cfg.optimizer.early_stop_window < 0) fail("optimizer.early_stop_window", "must be >= 0");

  if (root.contains("evaluation")) {
    const json& e = root.at("evaluation");
    reject_unknown(e, "evaluation", {"window_T", "grid_points", "normalize"});
    cfg.evaluation.window_T = get_number(e, "evaluation", "window_T", 0.0);
    cfg.evaluation.grid_points =
        static_cast<int>(get_int(e, "evaluation", "grid_points", cfg.evaluation.grid_points));
    cfg.evaluation.normalize = get_bool(e, "evaluation", "normalize", true);
  }
  require_nonnegative(cfg.evaluation.window_T, "evaluation.window_T");
  if (cfg.evaluation.grid_points < 100) fail("evaluation.grid_points", "must be >= 100");

  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    reject_unknown(s, "sweep", {"n_s", "n_a", "seeds"});
    SweepConfig sw;
    if (!s.contains("n_s")) fail("sweep.n_s", "required");
    if (!s.contains("n_a")) fail("sweep.n_a", "required");
    for (long long n : get_int_list(s, "sweep", "n_s")) {
      if (n < 1 || n > 64) fail("sweep.n_s", "particle counts must lie in [1, 64]");
      sw.n_s.push_back(static_cast<int>(n));
    }
    for (long long n : get_int_list(s, "sweep", "n_a")) {
      if (n < 1 || n > 64) fail("sweep.n_a", "particle counts must lie in [1, 64]");
      sw.n_a.push_back(static_cast<int>(n));
    }
    if (s.contains("seeds")) {
      sw.seeds.clear();
      for (long long x : get_int_list(s, "sweep", "seeds")) {
        if (x < 0) fail("sweep.seeds", "seeds must be >= 0");
        sw.seeds.push_back(static_cast<std::uint64_t>(x));
      }
    }
    cfg.sweep = sw;
  }

  if (root.contains("oracle")) {
    const json& o = root.at("oracle");
    const std::string p = "oracle";
    reject_unknown(o, p, {"n_a", "cases", "times", "t_max", "tolerance"});
    auto& oc = cfg.oracle;
    if (o.contains("n_a")) {
      oc.n_a.clear();
      for (long long n : get_int_list(o, p, "n_a")) {
        if (n < 1 || n > 64) fail("oracle.n_a", "particle counts must lie in [1, 64]");
        oc.n_a.push_back(static_cast<int>(n));
      }
    }
    oc.cases = static_cast<int>(get_int(o, p, "cases", oc.cases));
    oc.times = static_cast<int>(get_int(o, p, "times", oc.times));
    oc.t_max = get_number(o, p, "t_max", oc.t_max);
    oc.tolerance = get_number(o, p, "tolerance", oc.tolerance);
    if (oc.cases < 1) fail("oracle.cases", "must be >= 1");
    if (oc.times < 1) fail("oracle.times", "must be >= 1");
    require_positive(oc.t_max, "oracle.t_max");
    require_positive(oc.tolerance, "oracle.tolerance");
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown(o, "output", {"dir", "trajectory_rho"});
    cfg.output.dir = get_string(o, "output", "dir", cfg.output.dir);
    cfg.output.trajectory_rho = get_bool(o, "output", "trajectory_rho", false);
    if (cfg.output.dir.empty()) fail("output.dir", "must not be empty");
  }

  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::oracle_check:
      if (cfg.noisy()) fail("noise", "oracle_check requires noiseless dynamics (lambda = 0)");
      if (cfg.system.n != 1) fail("system.n", "oracle_check compares against the one-boson formula");
      break;
    case Mode::train:
      if (!cfg.ancilla) fail("ancilla", "required for mode train");
      break;
    case Mode::sweep:
      if (!cfg.sweep) fail("sweep", "required for mode sweep");
      break;
    case Mode::simulate:
      break;
  }
  if (cfg.mode != Mode::sweep && cfg.sweep) fail("sweep", "only valid with mode sweep");
  if (cfg.optimizer.ancilla_mode == AncillaMode::diagonal && cfg.ancilla) {
    const auto kind = cfg.ancilla->state.kind;
    if (kind == AncillaStateSpec::Kind::superposition ||
        kind == AncillaStateSpec::Kind::amplitudes) {
      if (cfg.ancilla->freeze_state) {
        fail("ancilla.state", "a frozen coherent state cannot be held in diagonal mode");
      }
    }
  }
}

std::string canonical_json(const ExperimentConfig& cfg) {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  json j;
  j["mode"] = to_string(cfg.mode);
  j["system"] = {{"n", cfg.system.n}, {"eta", cfg.system.eta}, {"gamma", cfg.system.gamma},
                 {"delta", cfg.system.delta}};
  if (cfg.ancilla) {
    const AncillaConfig& a = *cfg.ancilla;
    json state = {{"kind", state_name(a.state.kind)}};
    if (!a.state.amplitudes.empty()) {
      json amps = json::array();
      for (const Complex& z : a.state.amplitudes) amps.push_back({z.real(), z.imag()});
      state["amplitudes"] = amps;
    }
    if (!a.state.weights.empty()) state["weights"] = a.state.weights;
    j["ancilla"] = {{"n", a.params.n},
                    {"eta", a.params.eta},
                    {"gamma", a.params.gamma},
                    {"delta", a.params.delta},
                    {"state", state},
                    {"frozen",
                     {{"eta", a.freeze_eta},
                      {"gamma", a.freeze_gamma},
                      {"delta", a.freeze_delta},
                      {"state", a.freeze_state}}}};
  }
  json alpha = json::array();
  const Eigen::Matrix3d& m = cfg.coupling.coupling.coefficients();
  for (int r = 0; r < 3; ++r) alpha.push_back({m(r, 0), m(r, 1), m(r, 2)});
  j["coupling"] = {{"matrix", alpha}, {"full", cfg.coupling.full}, {"frozen", cfg.coupling.frozen}};
  j["noise"] = {{"lambda_s", cfg.noise.lambda_s}, {"lambda_a", cfg.noise.lambda_a}};
  const auto& it = cfg.integrator;
  j["integrator"] = {{"dt", it.dt},
                     {"train_dt", it.train_dt},
                     {"horizon_T", it.horizon_T},
                     {"sample_every", it.sample_every},
                     {"gate_temperature", it.gate_temperature}};
  j["time"] = {{"t_hat", cfg.time.t_hat}, {"frozen", cfg.time.frozen}};
  const auto& op = cfg.optimizer;
  j["optimizer"] = {{"lr", op.lr},
                    {"max_iters", op.max_iters},
                    {"seed", op.seed},
                    {"engine", to_string(op.engine)},
                    {"ancilla_mode", op.ancilla_mode ? to_string(*op.ancilla_mode) : "auto"},
                    {"init", op.random_init ? "random" : "ones"},
                    {"early_stop_tol", op.early_stop_tol},
                    {"early_stop_window", op.early_stop_window},
                    {"project_diagonal",
                     op.project_diagonal ? json(*op.project_diagonal) : json("auto")}};
  j["evaluation"] = {{"window_T", cfg.evaluation.window_T},
                     {"grid_points", cfg.evaluation.grid_points},
                     {"normalize", cfg.evaluation.normalize}};
  if (cfg.sweep) {
    j["sweep"] = {{"n_s", cfg.sweep->n_s}, {"n_a", cfg.sweep->n_a}, {"seeds", cfg.sweep->seeds}};
  }
  j["oracle"] = {{"n_a", cfg.oracle.n_a},
                 {"cases", cfg.oracle.cases},
                 {"times", cfg.oracle.times},
                 {"t_max", cfg.oracle.t_max},
                 {"tolerance", cfg.oracle.tolerance}};
  return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_json(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace tunnelcat
