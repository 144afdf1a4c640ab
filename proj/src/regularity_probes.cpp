#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "nllab/conditions.hpp"
#include "nllab/error.hpp"
#include "nllab/regularity.hpp"

namespace nllab {

namespace {

bool is_integer(double x) { return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x)); }

// Node index of x on the grid, or -1 if x is not a grid point.
long node_of(const Grid& grid, const Point& x) {
  long idx = 0;
  long stride = 1;
  for (int a = 0; a < grid.dim; ++a) {
    const double pos = (x[static_cast<std::size_t>(a)] + grid.box_radius) / grid.h;
    if (!is_integer(pos)) return -1;
    const long i = std::lround(pos);
    if (i < 0 || i >= grid.n) return -1;
    idx += i * stride;
    stride *= grid.n;
  }
  return idx;
}

ExteriorData pull_back(const ExteriorData& g, double rho, double r, const Point& xi, double tau) {
  if (g.constant) return g;
  auto fn = g.fn;
  return ExteriorData::function(
      [fn, rho, r, xi, tau](double t, const Point& x) {
        return fn(rho * t + tau, Point{r * x[0] + xi[0], r * x[1] + xi[1]});
      },
      g.time_independent);
}

}  // namespace

double scaled_assembly_mismatch(const MeasureSpec& spec, double h, double r, int cells) {
  spec.validate();
  require(spec.kind == MeasureKind::AlphaStable || spec.kind == MeasureKind::Axes,
          "the scaling check supports the AlphaStable and Axes kinds");
  require(h > 0.0 && r > 0.0 && cells >= 2, "spacing, ratio and cell count must be positive");
  const double box = cells * h;
  const DiscreteOperator unit(spec, make_grid(spec.dim, box, h, 0.5 * box));
  const DiscreteOperator image(spec, make_grid(spec.dim, r * box, r * h, 0.5 * r * box));
  const double factor = std::pow(r, spec.alpha);
  double worst = 0.0;
  auto compare = [&](double a, double b) {
    const double scale = std::max(std::abs(a), std::numeric_limits<double>::min());
    worst = std::max(worst, std::abs(a - factor * b) / scale);
  };
  const int reach = 2 * cells;
  for (int m2 = spec.dim == 2 ? -reach : 0; m2 <= (spec.dim == 2 ? reach : 0); ++m2)
    for (int m1 = -reach; m1 <= reach; ++m1) {
      if (m1 == 0 && m2 == 0) continue;
      const double a = unit.weight_by_offset(m1, m2);
      if (a == 0.0) continue;
      compare(a, image.weight_by_offset(m1, m2));
    }
  require(unit.grid().interior_size() == image.grid().interior_size(), "grids of the two assemblies differ");
  for (std::size_t k = 0; k < unit.grid().interior_size(); ++k) compare(unit.tail_mass(k), image.tail_mass(k));
  return worst;
}

ScalingReport scaling_check(const ScalingProblem& problem, const ScalingParams& params) {
  const MeasureSpec& spec = problem.spec;
  spec.validate();
  require(spec.kind == MeasureKind::AlphaStable || spec.kind == MeasureKind::Axes,
          "the scaling check supports the translation-invariant AlphaStable and Axes kinds");
  require(params.r > 0.0 && std::isfinite(params.r), "r must be positive");
  require(problem.h > 0.0 && problem.dt > 0.0, "h and dt must be positive");
  require(problem.unit_domain >= 1.0, "the unit domain must contain B_1");
  require(static_cast<bool>(problem.u0), "initial data are required");
  require(spec.dim == 2 || params.xi[1] == 0.0, "a one-dimensional shift has no second coordinate");
  for (int a = 0; a < spec.dim; ++a)
    require(is_integer(params.xi[static_cast<std::size_t>(a)] / problem.h), "xi must be a grid offset");
  int denominator = 0;
  for (int q = 1; q <= 64 && denominator == 0; ++q)
    if (is_integer(params.r * q)) denominator = q;
  require(denominator > 0, "r is not a grid-commensurate ratio p/q with q <= 64");

  const int dim = spec.dim;
  const double r = params.r;
  const double rho = std::pow(r, spec.alpha);
  const Point xi = params.xi;
  const double tau = params.tau;
  const double h = problem.h;
  double shift = 0.0;
  for (int a = 0; a < dim; ++a) shift = std::max(shift, std::abs(xi[static_cast<std::size_t>(a)]));

  ScalingReport rep;
  rep.original_h = h;
  rep.original_dt = rho * problem.dt;
  rep.original_box = h * std::ceil((r * problem.unit_box + shift) / h - 1e-9);

  auto original_ivp = [&](double spacing, double step) {
    IvpConfig cfg;
    cfg.op = std::make_shared<const DiscreteOperator>(
        spec, make_grid(dim, rep.original_box, spacing, r * problem.unit_domain, xi));
    cfg.t0 = tau - rho;
    cfg.t1 = tau + rho;
    cfg.dt = step;
    cfg.theta = problem.theta;
    cfg.tolerance = problem.tolerance;
    cfg.u0 = problem.u0;
    cfg.g = problem.g;
    cfg.f = problem.f;
    return solve(cfg);
  };

  const SpaceTimeFunction original = original_ivp(h, rep.original_dt);

  IvpConfig unit;
  unit.op = std::make_shared<const DiscreteOperator>(spec, make_grid(dim, problem.unit_box, h, problem.unit_domain));
  unit.t0 = -1.0;
  unit.t1 = 1.0;
  unit.dt = problem.dt;
  unit.theta = problem.theta;
  unit.tolerance = problem.tolerance;
  const auto u0 = problem.u0;
  unit.u0 = [u0, r, xi](const Point& x) { return u0(Point{r * x[0] + xi[0], r * x[1] + xi[1]}); };
  unit.g = pull_back(problem.g, rho, r, xi, tau);
  if (problem.f) {
    const auto f = problem.f;
    unit.f = [f, rho, r, xi, tau](double t, const Point& x) {
      return rho * f(rho * t + tau, Point{r * x[0] + xi[0], r * x[1] + xi[1]});
    };
  }
  const SpaceTimeFunction direct = solve(unit);
  require(direct.levels() == original.levels(), "the two time grids do not correspond");

  // Unit points in the closed unit ball whose image is a node of the original grid.
  std::vector<std::pair<std::size_t, std::size_t>> matched;
  const Grid& ug = direct.grid();
  for (std::size_t i = 0; i < ug.size(); ++i) {
    const Point& x = ug.nodes[i];
    if (norm(x, dim) > 1.0 + 1e-12) continue;
    const long j = node_of(original.grid(), Point{r * x[0] + xi[0], r * x[1] + xi[1]});
    if (j >= 0) matched.emplace_back(i, static_cast<std::size_t>(j));
  }
  require(!matched.empty(), "no unit grid point maps onto the original grid");
  for (std::size_t k = 0; k < direct.levels(); ++k)
    for (const auto& [i, j] : matched) rep.discrepancy = std::max(rep.discrepancy, std::abs(direct.at(k, i) - original.at(k, j)));
  rep.compared = matched.size() * direct.levels();

  if (problem.reference_factor > 0) {
    const int factor = problem.reference_factor;
    const SpaceTimeFunction fine = original_ivp(h / factor, rep.original_dt / factor);
    for (std::size_t k = 0; k < original.levels(); ++k) {
      const std::size_t kf = k * static_cast<std::size_t>(factor);
      for (const auto& [i, j] : matched) {
        const long jf = node_of(fine.grid(), original.grid().nodes[j]);
        require(jf >= 0, "reference grid does not contain the comparison point");
        rep.epsilon_scheme =
            std::max(rep.epsilon_scheme, std::abs(original.at(k, j) - fine.at(kf, static_cast<std::size_t>(jf))));
      }
    }
  }
  return rep;
}

HeatKernelReport heat_kernel_profile(const MeasureSpec& spec, const std::vector<double>& t_list,
                                     const HeatKernelOptions& options) {
  spec.validate();
  require(spec.kind == MeasureKind::AlphaStable, "the heat-kernel profile needs the AlphaStable kind");
  require(!t_list.empty(), "no output times");
  for (double t : t_list) require(t > 0.0, "output times must be positive");
  const double t_end = *std::max_element(t_list.begin(), t_list.end());
  const int dim = spec.dim;
  const double alpha = spec.alpha;

  auto run = [&](double box) {
    IvpConfig cfg;
    cfg.op = std::make_shared<const DiscreteOperator>(spec, make_grid(dim, box, options.h, box));
    const Grid& g = cfg.op->grid();
    cfg.t0 = 0.0;
    cfg.t1 = t_end;
    cfg.dt = options.dt;
    cfg.theta = options.theta;
    cfg.tolerance = options.tolerance;
    cfg.u0_values.assign(g.interior_size(), 0.0);
    const long centre = node_of(g, Point{});
    require(centre >= 0 && g.is_interior(static_cast<std::size_t>(centre)), "the origin must be an unknown");
    cfg.u0_values[static_cast<std::size_t>(g.unknown_index[static_cast<std::size_t>(centre)])] = 1.0 / std::pow(options.h, dim);
    return solve(cfg);
  };

  HeatKernelReport rep;
  const SpaceTimeFunction u = run(options.box);
  const Grid& g = u.grid();
  const double hd = std::pow(options.h, dim);
  const std::size_t centre = static_cast<std::size_t>(node_of(g, Point{}));
  std::vector<double> doubled_mass;
  if (options.doubled_box_mass) {
    const SpaceTimeFunction wide = run(2.0 * options.box);
    for (double t : t_list) {
      double m = 0.0;
      for (double v : wide.interior[wide.level_of(t)]) m += v * hd;
      doubled_mass.push_back(m);
    }
  }
  for (std::size_t q = 0; q < t_list.size(); ++q) {
    const double t = t_list[q];
    const std::size_t k = u.level_of(t);
    const double c = u.at(k, centre);
    rep.t.push_back(t);
    rep.center.push_back(c);
    rep.scaled_center.push_back(c * std::pow(t, dim / alpha));
    double m = 0.0;
    for (double v : u.interior[k]) m += v * hd;
    rep.mass.push_back(m);
    if (options.doubled_box_mass) rep.mass_doubled.push_back(doubled_mass[q]);

    const double start = options.far_factor * std::pow(t, 1.0 / alpha);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = norm(g.nodes[i], dim);
      if (r < start || r > 0.5 * options.box || !g.is_interior(i)) continue;
      const double ratio = u.at(k, i) / (t * std::pow(r, -dim - alpha));
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      ++count;
    }
    rep.far_points.push_back(count);
    rep.truncated.push_back(count == 0);
    rep.far_min.push_back(count ? lo : 0.0);
    rep.far_max.push_back(count ? hi : 0.0);
  }
  return rep;
}

StrongHarnackReport strong_harnack_probe(const MeasureSpec& spec, const std::vector<double>& concentration,
                                         const StrongHarnackOptions& options) {
  spec.validate();
  require(spec.dim == 2, "the strong-Harnack probe runs in two dimensions");
  require(!concentration.empty(), "no concentration levels");
  require(options.offset > options.domain && options.offset <= options.box, "the mass must sit between the domain and the box edge");
  const auto op = std::make_shared<const DiscreteOperator>(spec, make_grid(2, options.box, options.h, options.domain));
  const Grid& grid = op->grid();
  std::vector<std::size_t> probe;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (norm(grid.nodes[i], 2) <= 0.5 * (1.0 + 1e-12)) probe.push_back(i);

  StrongHarnackReport rep;
  for (double c : concentration) {
    require(c > 0.0, "concentration levels must be positive");
    const double w = options.h / c;
    const Point centre{options.offset, 0.0};
    auto mass = [centre, w](const Point& x) {
      const double d2 = (x[0] - centre[0]) * (x[0] - centre[0]) + (x[1] - centre[1]) * (x[1] - centre[1]);
      return std::exp(-d2 / (w * w)) / (kPi * w * w);
    };
    ExteriorData g;
    if (options.symmetrize) {
      // Periodic trapezoid rule over the circle through x.
      constexpr int kAngles = 1024;
      g = ExteriorData::function(
          [mass](double, const Point& x) {
            const double r = std::hypot(x[0], x[1]);
            double s = 0.0;
            for (int q = 0; q < kAngles; ++q) {
              const double a = 2.0 * kPi * q / kAngles;
              s += mass(Point{r * std::cos(a), r * std::sin(a)});
            }
            return s / kAngles;
          },
          true);
    } else {
      g = ExteriorData::function([mass](double, const Point& x) { return mass(x); }, true);
    }
    const StationaryResult st = solve_stationary(op, g, options.dt, options.change_tol, options.max_steps);
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (std::size_t i : probe) {
      const double v = st.interior[static_cast<std::size_t>(grid.unknown_index[i])];
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    rep.concentration.push_back(c);
    rep.sup.push_back(hi);
    rep.inf.push_back(lo);
    rep.ratio.push_back(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    rep.relative_change.push_back(st.relative_change);
    rep.converged = rep.converged && st.converged;
  }
  return rep;
}

LuMinusReport lu_minus_check(const DiscreteOperator& op, const std::function<double(const Point&)>& u, double delta) {
  const Grid& grid = op.grid();
  require(static_cast<bool>(u), "u is required");
  require(delta > 0.0 && delta < op.spec().alpha, "delta must lie in (0, alpha)");
  require(norm(grid.omega_center, grid.dim) == 0.0 && grid.omega_radius >= 1.0, "the domain must contain B_1(0)");
  auto negative_part = [u](const Point& x) { return std::max(-u(x), 0.0); };
  std::vector<double> snap(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& x = grid.nodes[i];
    if (norm(x, grid.dim) < 3.0) require(u(x) >= 0.0, "u must be nonnegative on B_3");
    snap[i] = negative_part(x);
  }
  const ExteriorData g = ExteriorData::function([negative_part](double, const Point& x) { return negative_part(x); }, true);

  LuMinusReport rep;
  auto weigh = [&](const Point& y) {
    const double r = norm(y, grid.dim);
    if (r >= 3.0) rep.weighted_sup = std::max(rep.weighted_sup, negative_part(y) / std::pow(r - 1.0, delta));
  };
  for (const Point& y : grid.nodes) weigh(y);
  for (std::size_t k = 0; k < grid.interior_size(); ++k) {
    const Point& x = grid.nodes[grid.interior_nodes[k]];
    if (norm(x, grid.dim) >= 1.0) continue;
    rep.f_max = std::max(rep.f_max, std::abs(apply_row(op, snap, g, 0.0, k)));
    for (const Point& y : op.tail_rule(k).points) weigh(y);
  }
  rep.c0 = check_k3(op.spec(), delta, std::numeric_limits<double>::infinity()).c0_measured;
  rep.bound = (op.coefficients().trivial() ? 1.0 : 2.0) * rep.c0 * rep.weighted_sup;
  rep.within = rep.f_max <= rep.bound;
  return rep;
}

}  // namespace nllab
