#include "nllab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nllab/conditions.hpp"
#include "nllab/error.hpp"
#include "nllab/regularity.hpp"
#include "nllab/rng.hpp"
#include "output.hpp"

#ifndef NLLAB_VERSION_STRING
#define NLLAB_VERSION_STRING "0.0.0"
#endif

namespace nllab {

const char* version_string() { return NLLAB_VERSION_STRING; }

const char* to_string(Command command) {
  switch (command) {
    case Command::CheckConditions: return "check-conditions";
    case Command::Solve: return "solve";
    case Command::Regularity: return "regularity";
  }
  return "?";
}

Command command_from_string(const std::string& name) {
  if (name == "check-conditions") return Command::CheckConditions;
  if (name == "solve") return Command::Solve;
  if (name == "regularity") return Command::Regularity;
  fail(ErrorCode::InvalidInput, "unknown command '" + name + "'");
}

const std::vector<std::string>& regularity_experiments() {
  static const std::vector<std::string> names{"harnack", "hoelder",      "scaling",       "poincare", "loglemma",
                                              "moser",   "heatkernel", "strongharnack", "luminus"};
  return names;
}

namespace {

[[noreturn]] void bad_config(const std::string& message) { fail(ErrorCode::InvalidConfig, message); }

// Stream tags for the counter-based generator, one per consumer.
constexpr std::uint64_t kStreamRandomSign = 0x5349474eULL;
constexpr std::uint64_t kStreamPoincare = 0x504f494eULL;
constexpr std::uint64_t kStreamLuMinus = 0x4c554d49ULL;

Json describe(const MeasureSpec& spec) {
  Json j{{"kind", to_string(spec.kind)}, {"dim", spec.dim}, {"alpha", spec.alpha}, {"normalization", spec.normalization}};
  if (spec.kind == MeasureKind::Cusp) j["s"] = spec.s;
  return j;
}

Json describe(const Grid& g) {
  return {{"h", g.h}, {"box_radius", g.box_radius}, {"domain_radius", g.omega_radius}, {"nodes", g.size()},
          {"unknowns", g.interior_size()}};
}

struct GridChoice {
  double h, box, domain;
};

GridChoice grid_choice(const ExperimentConfig& cfg, double h, double box, double domain) {
  return {cfg.grid.h.value_or(h), cfg.grid.box_radius.value_or(box), cfg.grid.domain_radius.value_or(domain)};
}

std::shared_ptr<const DiscreteOperator> build_operator(const MeasureSpec& spec, const GridChoice& g) {
  return std::make_shared<const DiscreteOperator>(spec, make_grid(spec.dim, g.box, g.h, g.domain));
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json spread(const std::vector<double>& v) {
  const double mx = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  const double med = median(v);
  return {{"max", mx}, {"median", med}, {"max_over_median", med > 0.0 ? mx / med : 0.0}, {"count", v.size()}};
}

std::function<double(const Point&)> spatial_data(const DataConfig& d, int dim, const ExperimentConfig& cfg,
                                                 const char* role) {
  if (d.kind == "constant") return [v = d.value](const Point&) { return v; };
  if (d.kind == "linear") return [v = d.value, s = d.slope](const Point& x) { return v + s * x[0]; };
  if (d.kind == "bump")
    return [d, dim](const Point& x) {
      const double q = 1.0 - std::pow(distance(x, d.center, dim) / d.width, 2);
      return q > 0.0 ? d.value * q * q * q : 0.0;
    };
  if (d.kind == "random_sign") {
    const std::uint64_t seed = cfg.seed("random_sign data");
    return [d, dim, seed](const Point& x) {
      auto cell = [&](int a) {
        return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(x[static_cast<std::size_t>(a)] / d.width + 1e-9)) +
                                          (1LL << 40));
      };
      const std::uint64_t j = dim == 2 ? cell(1) : 0;
      return (CounterRng::hash(seed, kStreamRandomSign ^ (j << 8), cell(0)) & 1U) ? d.value : -d.value;
    };
  }
  bad_config(std::string("data kind '") + d.kind + "' cannot be used for " + role);
}

ExteriorData exterior_data(const DataConfig& d, int dim, const ExperimentConfig& cfg) {
  if (d.kind == "constant") return ExteriorData::constant_value(d.value);
  auto fn = spatial_data(d, dim, cfg, "exterior data");
  return ExteriorData::function([fn](double, const Point& x) { return fn(x); }, true);
}

void set_initial(IvpConfig& ivp, const DataConfig& d, const ExperimentConfig& cfg) {
  const Grid& g = ivp.op->grid();
  if (d.kind == "hat") {
    const long centre = std::lround(g.box_radius / g.h);
    const std::size_t node = g.node_at(static_cast<int>(centre), g.dim == 2 ? static_cast<int>(centre) : 0);
    require(g.is_interior(node), "hat initial data need the origin inside the domain");
    ivp.u0_values.assign(g.interior_size(), 0.0);
    ivp.u0_values[static_cast<std::size_t>(g.unknown_index[node])] = 1.0 / std::pow(g.h, g.dim);
    return;
  }
  ivp.u0 = spatial_data(d, g.dim, cfg, "initial data");
}

void add_columns(std::vector<std::string>& header, int dim) {
  header.push_back("x1");
  if (dim == 2) header.push_back("x2");
}

// ------------------------------------------------------------------ check-conditions

Json run_conditions(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const MeasureSpec& spec = cfg.measure;
  Json summary{{"command", "check-conditions"}, {"measure", describe(spec)}, {"budget", e.budget}};
  Json results = Json::object();
  bool all_pass = true;
  for (const auto& name : e.conditions) {
    if (name == "k1") {
      const auto rep = check_k1(spec, e.rho, e.budget);
      CsvTable t({"rho", "value"});
      for (std::size_t i = 0; i < rep.scales.size(); ++i) t.row() << rep.scales[i] << rep.measured_values[i];
      out.write_csv("k1.csv", t);
      results["k1"] = {{"lambda_measured", rep.lambda_measured}, {"pass", rep.pass}, {"file", "k1.csv"}};
      all_pass = all_pass && rep.pass;
    } else if (name == "k2") {
      const Ball ball{{0.0, 0.0}, e.ball_radius};
      const std::uint64_t seed = cfg.seed("the K2 test-function suite");
      const auto suite = e.random_functions > 0 ? random_lipschitz_suite(spec.dim, ball, e.random_functions, seed)
                                                : default_k2_suite(spec.dim, ball, seed);
      const auto rep = check_k2(spec, ball, e.dh, suite, e.budget);
      CsvTable t({"dh", "function", "ratio"});
      for (std::size_t s = 0; s < rep.ratios.size(); ++s)
        for (std::size_t f = 0; f < rep.ratios[s].size(); ++f) t.row() << rep.scales[s] << suite[f].name << rep.ratios[s][f];
      out.write_csv("k2.csv", t);
      results["k2"] = {{"lambda_measured", rep.lambda_measured}, {"upper_ratio", rep.upper_ratio},
                       {"lower_ratio", rep.lower_ratio},         {"refinement_drift", rep.refinement_drift},
                       {"reverified", rep.reverified},           {"pass", rep.pass},
                       {"functions", suite.size()},              {"file", "k2.csv"}};
      all_pass = all_pass && rep.pass;
    } else if (name == "k3") {
      const auto rep = check_k3(spec, e.delta, e.budget);
      CsvTable t({"x_norm", "tail_integral"});
      for (std::size_t i = 0; i < rep.scales.size(); ++i) t.row() << rep.scales[i] << rep.measured_values[i];
      out.write_csv("k3.csv", t);
      results["k3"] = {{"delta", rep.delta}, {"c0_measured", rep.c0_measured}, {"divergent", rep.divergent},
                       {"pass", rep.pass},   {"file", "k3.csv"}};
      all_pass = all_pass && rep.pass;
    } else {
      bad_config("unknown condition '" + name + "' (expected k1, k2 or k3)");
    }
  }
  summary["conditions"] = results;
  summary["pass"] = all_pass;
  return summary;
}

// ------------------------------------------------------------------ solve

Json run_solve(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const auto op = build_operator(cfg.measure, grid_choice(cfg, 1.0 / 32, 4.0, 2.0));
  const Grid& g = op->grid();
  IvpConfig ivp;
  ivp.op = op;
  ivp.t0 = cfg.solver.t0.value_or(0.0);
  ivp.t1 = cfg.solver.t1.value_or(1.0);
  ivp.dt = cfg.solver.dt.value_or(g.h);
  ivp.theta = cfg.solver.theta;
  ivp.tolerance = cfg.solver.tolerance;
  set_initial(ivp, e.initial, cfg);
  ivp.g = exterior_data(e.exterior, g.dim, cfg);
  SolveStats stats;
  const auto u = solve(ivp, &stats);

  std::vector<double> times = e.snapshots.empty() ? std::vector<double>{ivp.t1} : e.snapshots;
  std::vector<std::string> header{"t"};
  add_columns(header, g.dim);
  header.insert(header.end(), {"u", "interior"});
  CsvTable t(header);
  Json snaps = Json::array();
  const std::size_t centre = g.size() / 2;
  for (double time : times) {
    const std::size_t k = u.level_of(time);
    const auto snap = u.snapshot(k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto row = t.row();
      row << u.times[k] << g.nodes[i][0];
      if (g.dim == 2) row << g.nodes[i][1];
      row << snap[i] << g.is_interior(i);
    }
    const auto [lo, hi] = std::minmax_element(snap.begin(), snap.end());
    snaps.push_back({{"t", u.times[k]}, {"center", snap[centre]}, {"min", *lo}, {"max", *hi}});
  }
  out.write_csv("solution.csv", t);
  return {{"command", "solve"},
          {"measure", describe(cfg.measure)},
          {"grid", describe(g)},
          {"t0", ivp.t0},
          {"t1", ivp.t1},
          {"dt", ivp.dt},
          {"theta", ivp.theta},
          {"steps", stats.steps},
          {"total_iterations", stats.total_iterations},
          {"max_relative_residual", stats.max_relative_residual},
          {"sparse_solver", stats.sparse},
          {"snapshots", snaps},
          {"file", "solution.csv"}};
}

// ------------------------------------------------------------------ regularity

SupersolutionBatch batch_for(const ExperimentConfig& cfg, std::shared_ptr<const DiscreteOperator> op) {
  SupersolutionOptions opt;
  opt.t0 = cfg.solver.t0.value_or(opt.t0);
  opt.t1 = cfg.solver.t1.value_or(opt.t1);
  opt.dt = cfg.solver.dt.value_or(opt.dt);
  opt.theta = cfg.solver.theta;
  auto batch = make_test_supersolutions(op, cfg.seed("the supersolution batch"), cfg.experiment.samples, opt);
  if (batch.samples.empty()) fail(ErrorCode::NumericalFailure, "no candidate passed the supersolution certificate");
  return batch;
}

GridChoice batch_grid(const ExperimentConfig& cfg) { return grid_choice(cfg, 1.0 / 32, 8.0, 2.0); }

Json run_harnack(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const double alpha = cfg.measure.alpha;
  const GridChoice base = batch_grid(cfg);
  std::vector<double> spacings{base.h};
  if (e.refine) spacings.push_back(base.h / 2);
  CsvTable t({"h", "sample", "source", "quotient", "l1_lower", "inf_upper", "f_sup", "degenerate"});
  Json runs = Json::array();
  std::vector<double> maxima;
  for (double h : spacings) {
    const auto op = build_operator(cfg.measure, {h, base.box, base.domain});
    const auto batch = batch_for(cfg, op);
    const auto rep = harnack_batch(batch.samples, {}, alpha);
    for (std::size_t s = 0; s < rep.samples.size(); ++s) {
      const auto& v = rep.samples[s];
      t.row() << h << s << "supersolution" << v.quotient << v.l1_lower << v.inf_upper << v.f_sup << v.degenerate;
    }
    Json run{{"h", h},
             {"dt", rep.dt},
             {"samples", rep.samples.size()},
             {"discarded", batch.discarded.size()},
             {"max_quotient", rep.max_quotient},
             {"degenerate_count", rep.degenerate_count}};
    if (e.constant_sample) {
      const auto c = harnack_quotient(SpaceTimeFunction::constant(op, batch.samples.front().times, 1.0), {}, alpha);
      t.row() << h << rep.samples.size() << "constant" << c.quotient << c.l1_lower << c.inf_upper << c.f_sup << c.degenerate;
      run["constant_quotient"] = c.quotient;
    }
    maxima.push_back(rep.max_quotient);
    runs.push_back(run);
  }
  out.write_csv("harnack.csv", t);
  Json summary{{"experiment", "harnack"}, {"measure", describe(cfg.measure)}, {"runs", runs}, {"file", "harnack.csv"}};
  if (maxima.size() == 2) summary["refinement_drift"] = refinement_drift(maxima[0], maxima[1]);
  return summary;
}

Json run_hoelder(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const double alpha = cfg.measure.alpha;
  const GridChoice base = grid_choice(cfg, 1.0 / 32, 4.0, 2.0);
  DataConfig initial = e.initial;
  if (initial.kind == "constant" && initial.value == 0.0) initial = DataConfig{"random_sign", 1.0, 1.0 / 64, 0.0, {}};
  Cylinder q;
  q.alpha = alpha;
  q.t_lo = e.t_lo;
  q.t_hi = e.t_hi;
  q.ball = {{0.0, 0.0}, e.radius};
  HolderOptions ho;
  ho.max_points = e.max_points;
  ho.seed = e.seed.value_or(1);
  // Every level fits over the window of the coarsest grid, so a refinement compares like with like.
  ho.min_distance = ho.min_distance_in_h * base.h;

  std::vector<double> spacings{base.h};
  if (e.refine) spacings.push_back(base.h / 2);
  const double dt0 = cfg.solver.dt.value_or(base.h / 2);
  CsvTable t({"h", "distance", "oscillation"});
  Json fits = Json::array();
  std::vector<double> betas;
  for (double h : spacings) {
    IvpConfig ivp;
    ivp.op = build_operator(cfg.measure, {h, base.box, base.domain});
    ivp.t0 = cfg.solver.t0.value_or(0.0);
    ivp.t1 = cfg.solver.t1.value_or(1.0);
    ivp.dt = dt0 * h / base.h;
    ivp.theta = cfg.solver.theta;
    ivp.tolerance = cfg.solver.tolerance;
    set_initial(ivp, initial, cfg);
    ivp.g = exterior_data(e.exterior, cfg.measure.dim, cfg);
    const auto rep = holder_fit(solve(ivp), q, alpha, ho);
    for (std::size_t b = 0; b < rep.bin_distance.size(); ++b) t.row() << h << rep.bin_distance[b] << rep.bin_oscillation[b];
    fits.push_back({{"h", h},
                    {"dt", ivp.dt},
                    {"constant", rep.constant},
                    {"beta", rep.beta},
                    {"seminorm", rep.seminorm},
                    {"eta", rep.eta},
                    {"fit_residual", rep.fit_residual},
                    {"sup_norm", rep.sup_norm},
                    {"window", {rep.window_lo, rep.window_hi}},
                    {"points", rep.points},
                    {"pairs", rep.pairs}});
    betas.push_back(rep.beta);
  }
  out.write_csv("hoelder.csv", t);
  Json summary{{"experiment", "hoelder"}, {"measure", describe(cfg.measure)}, {"fits", fits}, {"file", "hoelder.csv"}};
  if (betas.size() == 2 && betas[0] > 0.0) summary["beta_relative_change"] = std::abs(betas[1] - betas[0]) / betas[0];
  return summary;
}

Json run_scaling(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  ScalingProblem p;
  p.spec = cfg.measure;
  p.h = cfg.grid.h.value_or(1.0 / 32);
  p.dt = cfg.solver.dt.value_or(p.h / 2);
  p.theta = cfg.solver.theta;
  p.tolerance = std::min(cfg.solver.tolerance, 1e-12);
  if (cfg.grid.domain_radius) p.unit_domain = *cfg.grid.domain_radius;
  if (cfg.grid.box_radius) p.unit_box = *cfg.grid.box_radius;
  DataConfig initial = e.initial;
  if (initial.kind == "constant" && initial.value == 0.0) initial = DataConfig{"bump", 1.0, 0.5, 0.0, {}};
  p.u0 = spatial_data(initial, cfg.measure.dim, cfg, "initial data");
  p.g = exterior_data(e.exterior, cfg.measure.dim, cfg);
  ScalingParams params{e.r, e.xi, e.tau};

  CsvTable t({"h", "dt", "discrepancy", "epsilon_scheme", "compared"});
  Json rows = Json::array();
  std::vector<double> disc;
  for (int level = 0; level < e.refinements; ++level) {
    p.reference_factor = level == 0 ? 4 : 0;
    const auto rep = scaling_check(p, params);
    t.row() << p.h << p.dt << rep.discrepancy << rep.epsilon_scheme << rep.compared;
    rows.push_back({{"h", p.h}, {"dt", p.dt}, {"discrepancy", rep.discrepancy}, {"epsilon_scheme", rep.epsilon_scheme},
                    {"compared", rep.compared}, {"original_box", rep.original_box}});
    disc.push_back(rep.discrepancy);
    p.h /= 2;
    p.dt /= 2;
  }
  out.write_csv("scaling.csv", t);
  Json summary{{"experiment", "scaling"},
               {"measure", describe(cfg.measure)},
               {"r", e.r},
               {"xi", {e.xi[0], e.xi[1]}},
               {"tau", e.tau},
               {"levels", rows},
               {"within_scheme_error", disc[0] <= rows[0]["epsilon_scheme"].get<double>()},
               {"file", "scaling.csv"}};
  Json factors = Json::array();
  for (std::size_t i = 1; i < disc.size(); ++i) factors.push_back(disc[i] > 0.0 ? disc[i - 1] / disc[i] : 0.0);
  summary["decrease_factors"] = factors;
  return summary;
}

Json run_poincare(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const auto op = build_operator(cfg.measure, grid_choice(cfg, 1.0 / 32, 2.0, 2.0));
  const Grid& g = op->grid();
  const std::uint64_t seed = cfg.seed("the Poincaré function suite");
  std::vector<PoincareReport> reps(static_cast<std::size_t>(e.samples));
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < e.samples; ++s) {
    CounterRng rng(seed, kStreamPoincare + static_cast<std::uint64_t>(s));
    const double a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1), k = rng.uniform(0.5, 4.0), c = rng.uniform(-1, 1);
    const double tilt = rng.uniform(-1, 1);
    const auto v = sample_nodes(g, [&](const Point& x) {
      const double along = g.dim == 2 ? x[0] * std::cos(tilt) + x[1] * std::sin(tilt) : x[0];
      return a1 * std::sin(k * along + c) + a2 * norm(x, g.dim) * norm(x, g.dim);
    });
    reps[static_cast<std::size_t>(s)] = weighted_poincare_ratio(*op, v);
  }
  CsvTable t({"sample", "ratio", "lhs", "rhs", "weighted_mean", "degenerate"});
  std::vector<double> ratios;
  for (std::size_t s = 0; s < reps.size(); ++s) {
    const auto& r = reps[s];
    t.row() << s << r.ratio << r.lhs << r.rhs << r.weighted_mean << r.degenerate;
    if (!r.degenerate) ratios.push_back(r.ratio);
  }
  out.write_csv("poincare.csv", t);
  return {{"experiment", "poincare"}, {"measure", describe(cfg.measure)}, {"grid", describe(g)},
          {"ratio", spread(ratios)}, {"file", "poincare.csv"}};
}

Json run_loglemma(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const double alpha = cfg.measure.alpha;
  const auto op = build_operator(cfg.measure, batch_grid(cfg));
  const auto batch = batch_for(cfg, op);
  LogLevelOptions lo;
  lo.epsilon = e.epsilon;
  std::vector<LogLevelReport> reps(batch.samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < reps.size(); ++s) reps[s] = log_level_sets(batch.samples[s], {}, alpha, lo);
  CsvTable t({"sample", "a", "s", "lower_measure", "upper_measure"});
  std::vector<double> lower, upper;
  for (std::size_t s = 0; s < reps.size(); ++s) {
    const auto& r = reps[s];
    for (std::size_t q = 0; q < r.s.size(); ++q) t.row() << s << r.a << r.s[q] << r.lower_measure[q] << r.upper_measure[q];
    lower.push_back(r.sup_lower_product);
    upper.push_back(r.sup_upper_product);
  }
  out.write_csv("loglemma.csv", t);
  return {{"experiment", "loglemma"},
          {"measure", describe(cfg.measure)},
          {"samples", reps.size()},
          {"epsilon", e.epsilon},
          {"sup_lower_product", spread(lower)},
          {"sup_upper_product", spread(upper)},
          {"unit_ball_volume", cfg.measure.dim == 1 ? 2.0 : std::acos(-1.0)},
          {"file", "loglemma.csv"}};
}

Json run_moser(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const double alpha = cfg.measure.alpha;
  const int dim = cfg.measure.dim;
  const double kappa = moser_kappa(dim, alpha);
  std::vector<MoserMode> modes;
  for (const auto& m : e.modes) modes.push_back(moser_mode_from_string(m));
  struct Job {
    MoserMode mode;
    double p, r, R;
  };
  std::vector<Job> jobs;
  std::vector<double> pos_exponents;
  for (MoserMode m : modes)
    for (double p : e.exponents) {
      if (m == MoserMode::PosIter) {
        if (!(p < 1.0 / kappa)) continue;
        pos_exponents.push_back(p);
      }
      for (const auto& [r, R] : e.radii) jobs.push_back({m, p, r, R});
    }
  if (std::find(modes.begin(), modes.end(), MoserMode::PosIter) != modes.end() && pos_exponents.empty())
    bad_config("no exponent in experiment.exponents lies below 1/kappa = " + format_number(1.0 / kappa) +
               " as the positive mode requires");

  const auto op = build_operator(cfg.measure, batch_grid(cfg));
  const auto batch = batch_for(cfg, op);
  MoserOptions mo;
  mo.epsilon = e.epsilon;
  const std::size_t ns = batch.samples.size();
  std::vector<MoserReport> reps(ns * jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t idx = 0; idx < reps.size(); ++idx) {
    const Job& j = jobs[idx % jobs.size()];
    reps[idx] = moser_check(batch.samples[idx / jobs.size()], {}, alpha, j.mode, j.p, j.r, j.R, mo);
  }

  // One intercept per (sample, exponent) in the G2 fit.
  double omega = 0.0;
  if (!pos_exponents.empty()) {
    std::vector<std::vector<MoserReport>> groups;
    for (std::size_t s = 0; s < ns; ++s)
      for (double p : pos_exponents) {
        std::vector<MoserReport> group;
        for (std::size_t j = 0; j < jobs.size(); ++j)
          if (jobs[j].mode == MoserMode::PosIter && jobs[j].p == p) group.push_back(reps[s * jobs.size() + j]);
        groups.push_back(std::move(group));
      }
    omega = fit_g2_exponent(groups);
    for (auto& r : reps)
      if (r.mode == MoserMode::PosIter) apply_g2_exponent(r, omega);
  }

  CsvTable t({"sample", "mode", "p", "r", "R", "lhs", "rhs", "a_prime", "g1", "g2", "implied_constant"});
  Json per_mode = Json::object();
  for (MoserMode m : modes) {
    std::vector<double> values;
    for (std::size_t idx = 0; idx < reps.size(); ++idx)
      if (reps[idx].mode == m) values.push_back(reps[idx].implied_constant);
    per_mode[to_string(m)] = spread(values);
  }
  for (std::size_t idx = 0; idx < reps.size(); ++idx) {
    const auto& r = reps[idx];
    t.row() << idx / jobs.size() << to_string(r.mode) << r.p << r.r << r.R << r.lhs << r.rhs << r.a_prime << r.g1 << r.g2
            << r.implied_constant;
  }
  out.write_csv("moser.csv", t);
  return {{"experiment", "moser"}, {"measure", describe(cfg.measure)}, {"samples", ns},
          {"kappa", kappa},        {"g2_exponent", omega},             {"implied_constant", per_mode},
          {"file", "moser.csv"}};
}

Json run_heatkernel(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  HeatKernelOptions o;
  o.box = cfg.grid.box_radius.value_or(o.box);
  o.h = cfg.grid.h.value_or(o.h);
  o.dt = cfg.solver.dt.value_or(o.dt);
  o.theta = cfg.solver.theta;
  o.tolerance = cfg.solver.tolerance;
  o.doubled_box_mass = e.doubled_box;
  const auto rep = heat_kernel_profile(cfg.measure, e.times, o);
  CsvTable t({"t", "center", "scaled_center", "far_min", "far_max", "far_points", "truncated", "mass", "mass_doubled"});
  for (std::size_t q = 0; q < rep.t.size(); ++q)
    t.row() << rep.t[q] << rep.center[q] << rep.scaled_center[q] << rep.far_min[q] << rep.far_max[q] << rep.far_points[q]
            << static_cast<bool>(rep.truncated[q]) << rep.mass[q]
            << (rep.mass_doubled.empty() ? std::numeric_limits<double>::quiet_NaN() : rep.mass_doubled[q]);
  out.write_csv("heatkernel.csv", t);
  const auto [lo, hi] = std::minmax_element(rep.scaled_center.begin(), rep.scaled_center.end());
  return {{"experiment", "heatkernel"},
          {"measure", describe(cfg.measure)},
          {"box_radius", o.box},
          {"h", o.h},
          {"dt", o.dt},
          {"scaled_center_spread", *hi / *lo},
          {"truncated", std::any_of(rep.truncated.begin(), rep.truncated.end(), [](bool b) { return b; })},
          {"file", "heatkernel.csv"}};
}

Json run_strongharnack(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  StrongHarnackOptions o;
  o.box = cfg.grid.box_radius.value_or(o.box);
  o.h = cfg.grid.h.value_or(o.h);
  o.domain = cfg.grid.domain_radius.value_or(o.domain);
  o.dt = cfg.solver.dt.value_or(o.dt);
  o.symmetrize = e.symmetrize;
  const auto rep = strong_harnack_probe(cfg.measure, e.concentrations, o);
  CsvTable t({"concentration", "ratio", "sup", "inf", "relative_change"});
  for (std::size_t q = 0; q < rep.ratio.size(); ++q)
    t.row() << rep.concentration[q] << rep.ratio[q] << rep.sup[q] << rep.inf[q] << rep.relative_change[q];
  out.write_csv("strongharnack.csv", t);
  bool increasing = true;
  for (std::size_t q = 1; q < rep.ratio.size(); ++q) increasing = increasing && rep.ratio[q] > rep.ratio[q - 1];
  const auto [lo, hi] = std::minmax_element(rep.ratio.begin(), rep.ratio.end());
  return {{"experiment", "strongharnack"},
          {"measure", describe(cfg.measure)},
          {"symmetrized", o.symmetrize},
          {"converged", rep.converged},
          {"strictly_increasing", increasing},
          {"ratio_band", *hi / *lo},
          {"file", "strongharnack.csv"}};
}

Json run_luminus(const ExperimentConfig& cfg, OutputSink& out) {
  const auto& e = cfg.experiment;
  const auto op = build_operator(cfg.measure, grid_choice(cfg, 1.0 / 16, 6.0, 1.0));
  const int dim = cfg.measure.dim;
  const std::uint64_t seed = cfg.seed("the random functions of the L(u^-) check");
  CsvTable t({"sample", "f_max", "weighted_sup", "c0", "bound", "within"});
  std::size_t within = 0;
  for (int s = 0; s < e.samples; ++s) {
    CounterRng rng(seed, kStreamLuMinus + static_cast<std::uint64_t>(s));
    const double amp = rng.uniform(0.1, 5.0), width = rng.uniform(0.2, 2.0), bg = rng.uniform(0.0, 2.0);
    const double angle = rng.uniform(0.0, 2.0 * std::acos(-1.0)), dist = rng.uniform(3.0, 9.0);
    const Point centre{dim == 2 ? dist * std::cos(angle) : dist * rng.sign(), dim == 2 ? dist * std::sin(angle) : 0.0};
    const auto u = [=](const Point& x) {
      if (norm(x, dim) < 3.0) return bg + std::cos(x[0]) * std::cos(x[0]);
      return -amp * std::exp(-std::pow(distance(x, centre, dim) / width, 2)) + 0.1 * std::sin(x[0]);
    };
    const auto r = lu_minus_check(*op, u, e.delta);
    t.row() << s << r.f_max << r.weighted_sup << r.c0 << r.bound << r.within;
    within += r.within ? 1 : 0;
  }
  out.write_csv("luminus.csv", t);
  return {{"experiment", "luminus"}, {"measure", describe(cfg.measure)}, {"delta", e.delta},
          {"samples", e.samples},    {"within", within},                 {"file", "luminus.csv"}};
}

Json run_regularity(const ExperimentConfig& cfg, OutputSink& out) {
  const std::string& name = cfg.experiment.name;
  if (name == "harnack") return run_harnack(cfg, out);
  if (name == "hoelder") return run_hoelder(cfg, out);
  if (name == "scaling") return run_scaling(cfg, out);
  if (name == "poincare") return run_poincare(cfg, out);
  if (name == "loglemma") return run_loglemma(cfg, out);
  if (name == "moser") return run_moser(cfg, out);
  if (name == "heatkernel") return run_heatkernel(cfg, out);
  if (name == "strongharnack") return run_strongharnack(cfg, out);
  if (name == "luminus") return run_luminus(cfg, out);
  std::string list;
  for (const auto& n : regularity_experiments()) list += (list.empty() ? "" : ", ") + n;
  bad_config("unknown experiment '" + name + "' (expected one of: " + list + ")");
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

RunResult run_command(Command command, ExperimentConfig config, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  if (options.seed) config.experiment.seed = options.seed;
  require(options.threads >= 0, "thread count must be nonnegative");
#ifdef _OPENMP
  if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
  // Reject unknown experiment names before anything touches the disk.
  if (command == Command::Regularity) {
    const auto& names = regularity_experiments();
    if (std::find(names.begin(), names.end(), config.experiment.name) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      bad_config("unknown experiment '" + config.experiment.name + "' (expected one of: " + list + ")");
    }
  }

  OutputSink out(options.out_dir.empty() ? config.output_dir : options.out_dir);
  Json summary;
  switch (command) {
    case Command::CheckConditions: summary = run_conditions(config, out); break;
    case Command::Solve: summary = run_solve(config, out); break;
    case Command::Regularity: summary = run_regularity(config, out); break;
  }
  RunResult result;
  result.out_dir = out.dir();
  result.summary_file = command == Command::Regularity ? config.experiment.name + ".json"
                                                       : std::string(command == Command::Solve ? "solve.json" : "conditions.json");
  result.summary_json = summary.dump(2) + "\n";
  out.write_text(result.summary_file, result.summary_json);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  Json manifest{{"tool", "nllab"},
                {"version", version_string()},
                {"command", to_string(command)},
                {"experiment", command == Command::Regularity ? Json(config.experiment.name) : Json(nullptr)},
                {"config_path", config.source_path},
                {"config_fnv1a64", hex64(fnv1a64(config.source_text))},
                {"seed", config.experiment.seed ? Json(*config.experiment.seed) : Json(nullptr)},
                {"threads", options.threads},
                {"started_utc", started_utc},
                {"wall_clock_seconds", wall},
                {"files", out.file_list()}};
  out.write_json("run.json", manifest);
  result.files = out.files();
  return result;
}

}  // namespace nllab
