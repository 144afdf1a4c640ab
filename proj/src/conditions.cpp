#include "nllab/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "nllab/error.hpp"
#include "nllab/rng.hpp"

namespace nllab {

const char* to_string(Condition c) {
  switch (c) {
    case Condition::K1: return "K1";
    case Condition::K2: return "K2";
    case Condition::K3: return "K3";
  }
  return "?";
}

EnergyGrid make_energy_grid(int dim, const Ball& ball, double dh) {
  require(dim == 1 || dim == 2, "dimension must be 1 or 2");
  require(ball.radius > 0.0 && dh > 0.0, "ball radius and dh must be positive");
  const double cells = 2.0 * ball.radius / dh;
  const long n = std::lround(cells);
  require(n >= 2 && std::abs(cells - static_cast<double>(n)) < 1e-9 * cells,
          "dh must divide the ball diameter (2 rho / dh integral)");
  EnergyGrid g;
  g.dim = dim;
  g.ball = ball;
  g.dh = dh;
  auto coord = [&](long i, int axis) { return ball.center[axis] - ball.radius + (static_cast<double>(i) + 0.5) * dh; };
  const long ny = dim == 2 ? n : 1;
  for (long j = 0; j < ny; ++j) {
    for (long i = 0; i < n; ++i) {
      const Point p{coord(i, 0), dim == 2 ? coord(j, 1) : 0.0};
      if (distance(p, ball.center, dim) <= ball.radius) g.nodes.push_back(p);
    }
  }
  return g;
}

std::vector<double> sample(const EnergyGrid& grid, const SpatialFunction& v) {
  std::vector<double> out;
  out.reserve(grid.nodes.size());
  for (const auto& p : grid.nodes) {
    const double value = v(p);
    require(std::isfinite(value), "test function has non-finite values on the grid");
    out.push_back(value);
  }
  return out;
}

namespace {

// Midpoint weight of the pair (x_j, y_k) without the outer dh^d factor.
double pair_weight(const MeasureSpec& spec, const Point& z, double dh) {
  if (spec.kind == MeasureKind::Axes || spec.dim == 1) {
    if (spec.dim == 2 && z[0] != 0.0 && z[1] != 0.0) return 0.0;
    const double r = norm(z, spec.dim);
    return line_density(spec, r) * dh;
  }
  if (spec.kind == MeasureKind::Cusp && !cusp_indicator(spec.s, z)) return 0.0;
  return radial_density(spec, norm(z, 2)) * dh * dh;
}

// Energies of several functions against the same pair weights. Row sums are formed
// independently and reduced in row order, so results do not depend on threading.
std::vector<double> energies(const MeasureSpec& spec, const EnergyGrid& grid,
                             const std::vector<std::span<const double>>& vs) {
  const std::size_t n = grid.nodes.size();
  const std::size_t m = vs.size();
  for (const auto& v : vs) require(v.size() == n, "grid function size does not match the energy grid");
  std::vector<double> rows(n * m, 0.0);
  const double outer = std::pow(grid.dh, grid.dim);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
    double* acc = rows.data() + static_cast<std::size_t>(j) * m;
    const Point& x = grid.nodes[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < n; ++k) {
      if (k == static_cast<std::size_t>(j)) continue;
      const Point& y = grid.nodes[k];
      const double w = pair_weight(spec, Point{x[0] - y[0], x[1] - y[1]}, grid.dh);
      if (w == 0.0) continue;
      for (std::size_t f = 0; f < m; ++f) {
        const double d = vs[f][static_cast<std::size_t>(j)] - vs[f][k];
        acc[f] += d * d * w;
      }
    }
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t f = 0; f < m; ++f) out[f] += rows[j * m + f];
  for (auto& e : out) e *= outer;
  return out;
}

MeasureSpec canonical_spec(const MeasureSpec& spec) {
  const double a = effective_order(spec);
  return MeasureSpec::alpha_stable(spec.dim, a, 2.0 - a);
}

}  // namespace

double discrete_energy(const MeasureSpec& spec, const EnergyGrid& grid, std::span<const double> v) {
  spec.validate();
  return energies(spec, grid, {v}).front();
}

double canonical_energy(const MeasureSpec& spec, const EnergyGrid& grid, std::span<const double> v) {
  return discrete_energy(canonical_spec(spec), grid, v);
}

EnergySample energy_sample(const MeasureSpec& spec, const Ball& ball, const SpatialFunction& v, double dh) {
  const auto grid = make_energy_grid(spec.dim, ball, dh);
  EnergySample s;
  s.ball = ball;
  s.dh = dh;
  s.v = sample(grid, v);
  s.e_mu = discrete_energy(spec, grid, s.v);
  s.e_alpha_normalized = canonical_energy(spec, grid, s.v);
  return s;
}

ConditionReport check_k1(const MeasureSpec& spec, const std::vector<double>& rho_list, double budget) {
  spec.validate();
  require(!rho_list.empty(), "rho list must be nonempty");
  const double a = effective_order(spec);
  ConditionReport rep;
  rep.condition = Condition::K1;
  rep.budget = budget;
  const Point x0{0.0, 0.0};
  for (double rho : rho_list) {
    require(rho > 0.0 && std::isfinite(rho), "rho values must be positive");
    const double moment = second_moment_in_ball(spec, x0, rho).value;
    const double tail = measure_of_set(spec, x0, Complement{Ball{x0, rho}}).value;
    const double value = std::pow(rho, a) * (moment / (rho * rho) + tail);
    rep.scales.push_back(rho);
    rep.measured_values.push_back(value);
  }
  rep.lambda_measured = *std::max_element(rep.measured_values.begin(), rep.measured_values.end());
  rep.pass = rep.lambda_measured <= budget;
  return rep;
}

namespace {

double tent(double t) { return std::max(0.0, 1.0 - std::abs(t)); }

// Continuous piecewise-linear function of one variable on [-1, 1] with random knot values.
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;
  double operator()(double t) const {
    t = std::clamp(t, knots.front(), knots.back());
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - knots.begin()), knots.size() - 1);
    const std::size_t a = i == 0 ? 0 : i - 1;
    const double w = (t - knots[a]) / (knots[i] - knots[a]);
    return (1.0 - w) * values[a] + w * values[i];
  }
};

}  // namespace

std::vector<NamedFunction> default_k2_suite(int dim, const Ball& ball, std::uint64_t seed) {
  std::vector<NamedFunction> suite;
  const Point c = ball.center;
  const double rho = ball.radius;
  auto local = [c, rho](const Point& x, int axis) { return (x[axis] - c[axis]) / rho; };
  auto mode = [](int k, double s) { return std::cos(k * kPi * (s + 1.0) / 2.0); };
  for (int k2 = 0; k2 <= (dim == 2 ? 4 : 0); ++k2) {
    for (int k1 = 0; k1 <= 4; ++k1) {
      if (k1 == 0 && k2 == 0) continue;
      suite.push_back({"cos_" + std::to_string(k1) + "_" + std::to_string(k2), [=](const Point& x) {
                         return mode(k1, local(x, 0)) * (dim == 2 ? mode(k2, local(x, 1)) : 1.0);
                       }});
    }
  }
  CounterRng rng(seed, 0x4B32);
  for (int f = 0; f < 3; ++f) {
    PiecewiseLinear pl;
    pl.knots = {-1.0, rng.uniform(-0.8, -0.2), rng.uniform(-0.1, 0.1), rng.uniform(0.2, 0.8), 1.0};
    for (int i = 0; i < 5; ++i) pl.values.push_back(rng.uniform(-1.0, 1.0));
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double w0 = dim == 2 ? std::cos(phi) : 1.0;
    const double w1 = dim == 2 ? std::sin(phi) : 0.0;
    suite.push_back({"piecewise_linear_" + std::to_string(f),
                     [=](const Point& x) { return pl(w0 * local(x, 0) + w1 * local(x, 1)); }});
  }
  suite.push_back({"radial", [c, dim](const Point& x) { return distance(x, c, dim); }});
  return suite;
}

std::vector<NamedFunction> random_lipschitz_suite(int dim, const Ball& ball, int count, std::uint64_t seed) {
  std::vector<NamedFunction> suite;
  const Point c = ball.center;
  const double rho = ball.radius;
  for (int f = 0; f < count; ++f) {
    CounterRng rng(seed, 0x11B0 + static_cast<std::uint64_t>(f));
    struct Tent {
      Point center;
      double width;
      double height;
    };
    std::vector<Tent> tents;
    for (int t = 0; t < 3; ++t)
      tents.push_back({{rng.uniform(-1.0, 1.0), dim == 2 ? rng.uniform(-1.0, 1.0) : 0.0}, rng.uniform(0.3, 1.2),
                       rng.uniform(-1.0, 1.0)});
    suite.push_back({"lipschitz_" + std::to_string(f), [=](const Point& x) {
                       const Point s{(x[0] - c[0]) / rho, dim == 2 ? (x[1] - c[1]) / rho : 0.0};
                       double v = 0.0;
                       for (const auto& t : tents) v += t.height * tent(distance(s, t.center, dim) / t.width);
                       return v;
                     }});
  }
  return suite;
}

ConditionReport check_k2(const MeasureSpec& spec, const Ball& ball, const std::vector<double>& dh_list,
                         const std::vector<NamedFunction>& suite, double budget) {
  spec.validate();
  require(!dh_list.empty(), "dh list must be nonempty");
  require(!suite.empty(), "test suite must be nonempty");
  for (std::size_t i = 1; i < dh_list.size(); ++i) require(dh_list[i] < dh_list[i - 1], "dh list must be decreasing");
  const MeasureSpec canon = canonical_spec(spec);
  ConditionReport rep;
  rep.condition = Condition::K2;
  rep.budget = budget;
  rep.reverified = true;
  for (double dh : dh_list) {
    const auto grid = make_energy_grid(spec.dim, ball, dh);
    std::vector<std::vector<double>> values;
    values.reserve(suite.size());
    for (const auto& f : suite) values.push_back(sample(grid, f.fn));
    std::vector<std::span<const double>> views(values.begin(), values.end());
    const auto e_mu = energies(spec, grid, views);
    const auto e_al = energies(canon, grid, views);
    std::vector<double> ratios;
    std::vector<std::size_t> used;
    for (std::size_t f = 0; f < suite.size(); ++f) {
      if (!(e_al[f] > 0.0)) continue;  // constant on the grid: ratio undefined
      ratios.push_back(e_mu[f] / e_al[f]);
      used.push_back(f);
    }
    if (ratios.empty()) fail(ErrorCode::InvalidInput, "test suite contains only constant functions");
    const double upper = *std::max_element(ratios.begin(), ratios.end());
    const double lower = *std::min_element(ratios.begin(), ratios.end());
    const double lambda = std::max(upper, 1.0 / lower);
    // Literal re-check of both inequalities with the measured constant.
    for (std::size_t i = 0; i < used.size(); ++i) {
      const std::size_t f = used[i];
      const double slack = 1e-12 * std::max(e_mu[f], e_al[f]);
      if (e_mu[f] / lambda > e_al[f] + slack || e_al[f] > lambda * e_mu[f] + slack) rep.reverified = false;
    }
    rep.scales.push_back(dh);
    rep.measured_values.push_back(lambda);
    rep.ratios.push_back(std::move(ratios));
    rep.upper_ratio.push_back(upper);
    rep.lower_ratio.push_back(lower);
  }
  rep.lambda_measured = rep.measured_values.back();
  if (rep.measured_values.size() >= 2) {
    const double a = rep.measured_values[rep.measured_values.size() - 2];
    rep.refinement_drift = std::abs(rep.lambda_measured - a) / a;
  }
  rep.pass = rep.lambda_measured <= budget && rep.reverified;
  return rep;
}

ConditionReport check_k3(const MeasureSpec& spec, double delta, double budget) {
  spec.validate();
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  ConditionReport rep;
  rep.condition = Condition::K3;
  rep.delta = delta;
  rep.budget = budget;
  bool integrable = delta < spec.alpha;
  if (spec.kind == MeasureKind::Tabulated)
    integrable = spec.table->integrable_at_infinity(spec.dim == 2 ? delta + 1.0 : delta);
  if (!integrable) {
    rep.divergent = true;
    rep.c0_measured = kInf;
    rep.lambda_measured = kInf;
    rep.pass = false;
    return rep;
  }
  const double step = 0.25;
  const int n = 8;
  const SetDescriptor far = Complement{Ball{{0.0, 0.0}, 3.0}};
  for (int j = -(spec.dim == 2 ? n : 0); j <= (spec.dim == 2 ? n : 0); ++j) {
    for (int i = -n; i <= n; ++i) {
      const Point x{i * step, j * step};
      if (norm(x, spec.dim) > 2.0) continue;
      rep.scales.push_back(norm(x, spec.dim));
      rep.measured_values.push_back(integrate_power(spec, x, far, delta).value);
    }
  }
  rep.c0_measured = *std::max_element(rep.measured_values.begin(), rep.measured_values.end());
  rep.lambda_measured = rep.c0_measured;
  rep.pass = rep.c0_measured <= budget;
  return rep;
}

AxesBridge axes_bridge(double alpha, const EnergyGrid& grid, std::span<const double> v) {
  require(grid.dim == 2, "the axes bridge is defined in two dimensions");
  require(v.size() == grid.nodes.size(), "grid function size does not match the energy grid");
  AxesBridge b;
  b.n = 2.0 * grid.ball.radius / grid.dh;
  const double h = grid.dh;
  const std::size_t n = grid.nodes.size();
  for (std::size_t j = 0; j < n; ++j) {
    double axes_row = 0.0;
    double f_row = 0.0;
    double alpha_row = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j) continue;
      const Point z{grid.nodes[j][0] - grid.nodes[k][0], grid.nodes[j][1] - grid.nodes[k][1]};
      const double r = norm(z, 2);
      const double d = v[j] - v[k];
      const double t = d * d * std::pow(r, -1.0 - alpha);
      f_row += t;
      if (z[0] == 0.0 || z[1] == 0.0) axes_row += t;
      alpha_row += t / r;
    }
    b.e_axes += axes_row;
    b.f += f_row;
    b.e_alpha += alpha_row;
  }
  b.e_axes *= h * h * h;
  b.f *= h * h * h;
  b.e_alpha *= h * h * h * h;
  return b;
}

}  // namespace nllab
