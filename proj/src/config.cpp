#include "nllab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nllab/error.hpp"

namespace nllab {

namespace {

[[noreturn]] void bad(const std::string& message) { fail(ErrorCode::InvalidConfig, message); }

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) bad("'" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) bad("unknown key '" + where + "." + key + "'");
  }
}

template <class T>
T read(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    bad("'" + path + "' has the wrong type");
  }
}

template <class T>
void get(const YAML::Node& block, const std::string& where, const char* key, T& out) {
  if (const auto n = block[key]) out = read<T>(n, where + "." + key);
}

template <class T>
void get(const YAML::Node& block, const std::string& where, const char* key, std::optional<T>& out) {
  if (const auto n = block[key]) out = read<T>(n, where + "." + key);
}

// Numbers may also be written as fractions "a/b", which keeps grid spacings exact.
double number(const YAML::Node& node, const std::string& path) {
  const auto text = read<std::string>(node, path);
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } else {
      const double a = std::stod(text.substr(0, slash), &used);
      if (used == slash) {
        const std::string rest = text.substr(slash + 1);
        const double b = std::stod(rest, &used);
        if (used == rest.size() && b != 0.0) return a / b;
      }
    }
  } catch (const std::exception&) {
  }
  bad("'" + path + "' is not a number: '" + text + "'");
}

void get_number(const YAML::Node& block, const std::string& where, const char* key, double& out) {
  if (const auto n = block[key]) out = number(n, where + "." + key);
}

void get_number(const YAML::Node& block, const std::string& where, const char* key, std::optional<double>& out) {
  if (const auto n = block[key]) out = number(n, where + "." + key);
}

void get_numbers(const YAML::Node& block, const std::string& where, const char* key, std::vector<double>& out) {
  const auto n = block[key];
  if (!n) return;
  const std::string path = where + "." + key;
  if (!n.IsSequence()) bad("'" + path + "' must be a list");
  out.clear();
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], path + "[" + std::to_string(i) + "]"));
}

void get_point(const YAML::Node& block, const std::string& where, const char* key, Point& out) {
  std::vector<double> v;
  get_numbers(block, where, key, v);
  if (!block[key]) return;
  if (v.empty() || v.size() > 2) bad("'" + where + "." + key + "' must have one or two coordinates");
  out = {v[0], v.size() > 1 ? v[1] : 0.0};
}

DataConfig parse_data(const YAML::Node& node, const std::string& where) {
  DataConfig d;
  check_keys(node, where, {"kind", "value", "width", "slope", "center"});
  get(node, where, "kind", d.kind);
  get_number(node, where, "value", d.value);
  get_number(node, where, "width", d.width);
  get_number(node, where, "slope", d.slope);
  get_point(node, where, "center", d.center);
  static const std::set<std::string> kinds{"constant", "hat", "bump", "random_sign", "linear"};
  if (!kinds.count(d.kind)) bad("'" + where + ".kind' must be one of constant, hat, bump, random_sign, linear");
  if (d.width <= 0.0) bad("'" + where + ".width' must be positive");
  return d;
}

MeasureSpec parse_measure(const YAML::Node& m, const std::string& base_dir) {
  check_keys(m, "measure", {"kind", "dim", "alpha", "s", "normalization", "table", "inner_exponent", "outer_exponent"});
  if (!m["kind"] || !m["alpha"]) bad("'measure' needs 'kind' and 'alpha'");
  MeasureSpec spec;
  spec.kind = measure_kind_from_string(read<std::string>(m["kind"], "measure.kind"));
  get(m, "measure", "dim", spec.dim);
  get_number(m, "measure", "alpha", spec.alpha);
  get_number(m, "measure", "s", spec.s);
  if (const auto n = m["normalization"]) {
    const auto text = read<std::string>(n, "measure.normalization");
    if (text == "robust") {
      spec.normalization = robust_normalization(spec.alpha);
    } else if (text == "fractional_laplacian") {
      spec.normalization = fractional_laplacian_constant(spec.dim, spec.alpha);
    } else {
      spec.normalization = number(n, "measure.normalization");
    }
  }
  if (spec.kind == MeasureKind::Tabulated) {
    if (!m["table"]) bad("a tabulated measure needs 'measure.table'");
    std::filesystem::path p = read<std::string>(m["table"], "measure.table");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::optional<double> inner, outer;
    get_number(m, "measure", "inner_exponent", inner);
    get_number(m, "measure", "outer_exponent", outer);
    spec.table = std::make_shared<const RadialTable>(RadialTable::load(p.string(), inner, outer));
  }
  spec.validate();
  return spec;
}

ExperimentParams parse_experiment(const YAML::Node& e) {
  ExperimentParams x;
  const std::string w = "experiment";
  check_keys(e, w,
             {"name", "seed", "samples", "conditions", "rho", "dh", "ball_radius", "budget", "delta", "random_functions",
              "initial", "exterior", "snapshots", "constant_sample", "refine", "t_lo", "t_hi", "radius", "max_points",
              "r", "xi", "tau", "refinements", "modes", "exponents", "radii", "epsilon", "times", "doubled_box",
              "concentrations", "symmetrize"});
  get(e, w, "name", x.name);
  get(e, w, "seed", x.seed);
  get(e, w, "samples", x.samples);
  if (e["conditions"]) x.conditions = read<std::vector<std::string>>(e["conditions"], "experiment.conditions");
  get_numbers(e, w, "rho", x.rho);
  get_numbers(e, w, "dh", x.dh);
  get_number(e, w, "ball_radius", x.ball_radius);
  get_number(e, w, "budget", x.budget);
  get_number(e, w, "delta", x.delta);
  get(e, w, "random_functions", x.random_functions);
  if (e["initial"]) x.initial = parse_data(e["initial"], "experiment.initial");
  if (e["exterior"]) x.exterior = parse_data(e["exterior"], "experiment.exterior");
  get_numbers(e, w, "snapshots", x.snapshots);
  get(e, w, "constant_sample", x.constant_sample);
  get(e, w, "refine", x.refine);
  get_number(e, w, "t_lo", x.t_lo);
  get_number(e, w, "t_hi", x.t_hi);
  get_number(e, w, "radius", x.radius);
  get(e, w, "max_points", x.max_points);
  get_number(e, w, "r", x.r);
  get_point(e, w, "xi", x.xi);
  get_number(e, w, "tau", x.tau);
  get(e, w, "refinements", x.refinements);
  if (e["modes"]) x.modes = read<std::vector<std::string>>(e["modes"], "experiment.modes");
  get_numbers(e, w, "exponents", x.exponents);
  if (const auto n = e["radii"]) {
    if (!n.IsSequence()) bad("'experiment.radii' must be a list of [r, R] pairs");
    x.radii.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string path = "experiment.radii[" + std::to_string(i) + "]";
      if (!n[i].IsSequence() || n[i].size() != 2) bad("'" + path + "' must be a pair [r, R]");
      x.radii.emplace_back(number(n[i][0], path), number(n[i][1], path));
    }
  }
  get_number(e, w, "epsilon", x.epsilon);
  get_numbers(e, w, "times", x.times);
  get(e, w, "doubled_box", x.doubled_box);
  get_numbers(e, w, "concentrations", x.concentrations);
  get(e, w, "symmetrize", x.symmetrize);
  if (x.samples < 1) bad("'experiment.samples' must be at least 1");
  if (x.refinements < 1) bad("'experiment.refinements' must be at least 1");
  return x;
}

}  // namespace

std::uint64_t ExperimentConfig::seed(const char* what) const {
  if (!experiment.seed) bad(std::string(what) + " is randomized and needs 'experiment.seed' (or --seed)");
  return *experiment.seed;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    bad(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) bad("config must be a mapping with measure, grid, solver, experiment and output blocks");
  check_keys(root, "config", {"measure", "grid", "solver", "experiment", "output"});
  if (!root["measure"]) bad("config has no 'measure' block");

  ExperimentConfig cfg;
  cfg.source_text = text;
  cfg.measure = parse_measure(root["measure"], base_dir);

  if (const auto g = root["grid"]) {
    check_keys(g, "grid", {"h", "box_radius", "domain_radius"});
    get_number(g, "grid", "h", cfg.grid.h);
    get_number(g, "grid", "box_radius", cfg.grid.box_radius);
    get_number(g, "grid", "domain_radius", cfg.grid.domain_radius);
    for (const auto& v : {cfg.grid.h, cfg.grid.box_radius, cfg.grid.domain_radius})
      if (v && !(*v > 0.0)) bad("grid spacing and radii must be positive");
  }
  if (const auto s = root["solver"]) {
    check_keys(s, "solver", {"t0", "t1", "dt", "theta", "tolerance"});
    get_number(s, "solver", "t0", cfg.solver.t0);
    get_number(s, "solver", "t1", cfg.solver.t1);
    get_number(s, "solver", "dt", cfg.solver.dt);
    get_number(s, "solver", "theta", cfg.solver.theta);
    get_number(s, "solver", "tolerance", cfg.solver.tolerance);
    if (cfg.solver.theta < 0.5 || cfg.solver.theta > 1.0) bad("'solver.theta' must lie in [1/2, 1]");
    if (cfg.solver.dt && !(*cfg.solver.dt > 0.0)) bad("'solver.dt' must be positive");
  }
  if (const auto e = root["experiment"]) cfg.experiment = parse_experiment(e);
  if (const auto o = root["output"]) {
    check_keys(o, "output", {"dir"});
    get(o, "output", "dir", cfg.output_dir);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path();
  auto cfg = parse_config(buf.str(), base.empty() ? "." : base.string());
  cfg.source_path = path;
  return cfg;
}

}  // namespace nllab
