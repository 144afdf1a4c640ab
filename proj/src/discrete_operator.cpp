#include "nllab/discrete_operator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>

#include "nllab/error.hpp"
#include "nllab/rng.hpp"

namespace nllab {

namespace {

// Gauss-Legendre rule on [0, 1].
template <unsigned N>
std::pair<std::vector<double>, std::vector<double>> unit_gauss() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  std::vector<double> nodes;
  std::vector<double> weights;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) {
      nodes.push_back(0.5);
      weights.push_back(0.5 * w[k]);
      continue;
    }
    for (double sgn : {-1.0, 1.0}) {
      nodes.push_back(0.5 * (1.0 + sgn * x[k]));
      weights.push_back(0.5 * w[k]);
    }
  }
  return {nodes, weights};
}

const std::pair<std::vector<double>, std::vector<double>>& tail_gauss() {
  static const auto rule = unit_gauss<20>();
  return rule;
}

const std::pair<std::vector<double>, std::vector<double>>& cell_gauss() {
  static const auto rule = unit_gauss<4>();
  return rule;
}

bool absolutely_continuous_2d(const MeasureSpec& spec) { return spec.dim == 2 && spec.kind != MeasureKind::Axes; }

// Density of the measure at displacement z (d = 2 absolutely continuous kinds).
double density_2d(const MeasureSpec& spec, const Point& z) {
  if (spec.kind == MeasureKind::Cusp && !cusp_indicator(spec.s, z)) return 0.0;
  return radial_density(spec, std::hypot(z[0], z[1]));
}

// True if the cell (first quadrant) meets both the cusp support and its complement
// N = {z1^{1/s} <= z2 <= z1^s}.
bool cusp_boundary_crosses(double s, const Cell& c) {
  const double a1 = c.lo[0], b1 = c.hi[0], a2 = std::max(c.lo[1], 0.0), b2 = c.hi[1];
  if (a1 > 1.0 && a2 > 1.0) return false;
  const bool meets = std::pow(std::max(a1, 0.0), 1.0 / s) <= b2 && std::pow(b1, s) >= a2;
  const bool inside = b2 <= std::pow(std::max(a1, 0.0), s) && a2 >= std::pow(b1, 1.0 / s);
  return meets && !inside;
}

}  // namespace

ExteriorData ExteriorData::constant_value(double c) {
  require(std::isfinite(c), "exterior constant must be finite");
  ExteriorData g;
  g.constant = c;
  g.fn = [c](double, const Point&) { return c; };
  return g;
}

ExteriorData ExteriorData::function(std::function<double(double, const Point&)> fn, bool time_independent) {
  require(static_cast<bool>(fn), "exterior data function is empty");
  ExteriorData g;
  g.fn = std::move(fn);
  g.time_independent = time_independent;
  return g;
}

void EquationCoefficients::validate(const Grid& grid, double t0, double t1, std::uint64_t seed) const {
  if (!a) return;
  CounterRng rng(seed, 0xA11);
  for (int k = 0; k < 512; ++k) {
    const double t = rng.uniform(t0, t1);
    const Point& x = grid.nodes[rng.below(grid.size())];
    const Point& y = grid.nodes[rng.below(grid.size())];
    const double v = a(t, x, y);
    const double w = a(t, y, x);
    require(std::isfinite(v) && v >= 1.0 && v <= 2.0, "coefficient a(t,x,y) must take values in [1, 2]");
    require(std::abs(v - w) <= 1e-12 * std::abs(v), "coefficient a(t,x,y) must be symmetric in x and y");
  }
}

DiscreteOperator::DiscreteOperator(MeasureSpec spec, Grid grid, EquationCoefficients coeff, OperatorOptions options)
    : spec_(std::move(spec)), grid_(std::move(grid)), coeff_(std::move(coeff)), options_(options) {
  spec_.validate();
  require(spec_.dim == grid_.dim, "measure and grid dimensions differ");
  require(options_.exact_radius >= 1, "exact_radius must be at least 1");
  line_supported_ = spec_.kind == MeasureKind::Axes || spec_.dim == 1;
  span_ = 2 * grid_.n - 1;
  build_stencil();
  build_tails();
}

std::size_t DiscreteOperator::offset_index(std::size_t i, std::size_t j) const {
  const int c = grid_.n - 1;
  if (grid_.dim == 1) return static_cast<std::size_t>(static_cast<int>(j) - static_cast<int>(i) + c);
  const int dx = grid_.axis_index(j, 0) - grid_.axis_index(i, 0) + c;
  const int dy = grid_.axis_index(j, 1) - grid_.axis_index(i, 1) + c;
  return static_cast<std::size_t>(dx) + static_cast<std::size_t>(span_) * static_cast<std::size_t>(dy);
}

double DiscreteOperator::weight_by_offset(int m1, int m2) const {
  const int c = grid_.n - 1;
  require(std::abs(m1) <= c && std::abs(m2) <= c && (grid_.dim == 2 || m2 == 0), "offset outside the stencil");
  const std::size_t k = grid_.dim == 1 ? static_cast<std::size_t>(m1 + c)
                                       : static_cast<std::size_t>(m1 + c) + static_cast<std::size_t>(span_) * (m2 + c);
  return stencil_[k];
}

void DiscreteOperator::build_stencil() {
  const int c = grid_.n - 1;
  const double h = grid_.h;
  const int dim = grid_.dim;
  const std::size_t count = dim == 1 ? static_cast<std::size_t>(span_) : static_cast<std::size_t>(span_) * span_;
  raw_.assign(count, 0.0);

  auto cell_at = [&](int m1, int m2) {
    return Cell{{(m1 - 0.5) * h, dim == 2 ? (m2 - 0.5) * h : 0.0}, {(m1 + 0.5) * h, dim == 2 ? (m2 + 0.5) * h : 0.0}};
  };

  // Offsets in the fundamental region; every built-in kind is invariant under
  // coordinate reflections and, in d = 2, under exchanging the coordinates.
  std::vector<std::pair<int, int>> reps;
  if (dim == 1) {
    for (int m = 1; m <= c; ++m) reps.emplace_back(m, 0);
  } else {
    for (int m1 = 1; m1 <= c; ++m1)
      for (int m2 = 0; m2 <= m1; ++m2)
        if (spec_.kind != MeasureKind::Axes || m2 == 0) reps.emplace_back(m1, m2);
  }

  std::vector<double> values(reps.size(), 0.0);
  const bool ac = absolutely_continuous_2d(spec_);
  const auto& [gx, gw] = cell_gauss();
  std::exception_ptr error;
  std::string failed_cell;

#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto [m1, m2] = reps[r];
    try {
      bool exact = !ac || std::max(m1, m2) <= options_.exact_radius;
      if (ac && spec_.kind == MeasureKind::Cusp && cusp_boundary_crosses(spec_.s, cell_at(m1, m2))) exact = true;
      if (exact) {
        values[r] = measure_of_set(spec_, Point{}, cell_at(m1, m2)).value;
      } else {
        double sum = 0.0;
        for (std::size_t a = 0; a < gx.size(); ++a)
          for (std::size_t b = 0; b < gx.size(); ++b) {
            const Point z{(m1 - 0.5 + gx[a]) * h, (m2 - 0.5 + gx[b]) * h};
            sum += gw[a] * gw[b] * density_2d(spec_, z);
          }
        values[r] = sum * h * h;
      }
    } catch (...) {
#pragma omp critical(nllab_stencil_error)
      if (!error) {
        error = std::current_exception();
        failed_cell = "(" + std::to_string(m1) + ", " + std::to_string(m2) + ")";
      }
    }
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const Error& e) {
      fail(e.code(), "assembly failed on cell offset " + failed_cell + ": " + e.what());
    }
  }

  auto put = [&](int a, int b, double v) {
    const std::size_t k =
        dim == 1 ? static_cast<std::size_t>(a + c) : static_cast<std::size_t>(a + c) + static_cast<std::size_t>(span_) * (b + c);
    raw_[k] = v;
  };
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const auto [m1, m2] = reps[r];
    const double v = values[r];
    if (dim == 1) {
      put(m1, 0, v);
      put(-m1, 0, v);
      continue;
    }
    for (int sx : {-1, 1})
      for (int sy : {-1, 1}) {
        put(sx * m1, sy * m2, v);
        put(sx * m2, sy * m1, v);
      }
  }

  // Quadratic exactness near the diagonal: the stencil's second moment over the square
  // of half-width (R + 1/2) h is raised to the exact value through the nearest neighbours.
  const int R = options_.correction_radius < 0 ? c : std::min(options_.correction_radius, c);
  const double half = (R + 0.5) * h;
  const Cell square{{-half, dim == 2 ? -half : 0.0}, {half, dim == 2 ? half : 0.0}};
  const double exact_moment = integrate_power(spec_, Point{}, square, 2.0).value;
  double stencil_moment = 0.0;
  for (int m1 = -R; m1 <= R; ++m1)
    for (int m2 = (dim == 2 ? -R : 0); m2 <= (dim == 2 ? R : 0); ++m2) {
      if (m1 == 0 && m2 == 0) continue;
      const std::size_t k = dim == 1 ? static_cast<std::size_t>(m1 + c)
                                     : static_cast<std::size_t>(m1 + c) + static_cast<std::size_t>(span_) * (m2 + c);
      stencil_moment += raw_[k] * h * h * (static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2);
    }
  correction_ = (exact_moment - stencil_moment) / (2.0 * dim * h * h);
  // The correction is negative for small orders; the corrected weight must stay
  // nonnegative so the implicit step keeps its M-matrix sign structure.
  const double nearest = raw_[dim == 1 ? static_cast<std::size_t>(1 + c) : static_cast<std::size_t>(1 + c) + static_cast<std::size_t>(span_) * c];
  if (!std::isfinite(correction_) || (c >= 1 && nearest + correction_ < 0.0))
    fail(ErrorCode::NumericalFailure, "near-diagonal correction makes the nearest weight negative (" +
                                          std::to_string(nearest + correction_) + ")");

  stencil_ = raw_;
  if (c >= 1) {
    auto idx = [&](int a, int b) {
      return dim == 1 ? static_cast<std::size_t>(a + c)
                      : static_cast<std::size_t>(a + c) + static_cast<std::size_t>(span_) * (b + c);
    };
    stencil_[idx(1, 0)] += correction_;
    stencil_[idx(-1, 0)] += correction_;
    if (dim == 2) {
      stencil_[idx(0, 1)] += correction_;
      stencil_[idx(0, -1)] += correction_;
    }
  }
}

void DiscreteOperator::build_tails() {
  const std::size_t m = grid_.interior_size();
  tail_.assign(m, 0.0);
  const BoxComplement beyond{grid_.outer_box()};
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t k = 0; k < m; ++k) {
    try {
      tail_[k] = measure_of_set(spec_, grid_.nodes[grid_.interior_nodes[k]], beyond).value;
    } catch (...) {
#pragma omp critical(nllab_tail_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

TailRule DiscreteOperator::tail_rule(std::size_t unknown) const {
  const Point x = grid_.nodes[grid_.interior_nodes.at(unknown)];
  const BoxComplement beyond{grid_.outer_box()};
  const auto& [gx, gw] = tail_gauss();
  const double alpha = spec_.alpha;
  TailRule rule;

  // Radial substitution r = r0 w^{-1/alpha}, under which the stable tail is uniform in w.
  auto radial = [&](const Point& u, double r0, double factor, bool polar) {
    for (std::size_t q = 0; q < gx.size(); ++q) {
      const double w = gx[q];
      const double r = r0 * std::pow(w, -1.0 / alpha);
      const double jac = (r0 / alpha) * std::pow(w, -1.0 / alpha - 1.0);
      const double dens = polar ? radial_density(spec_, r) * r : line_density(spec_, r);
      rule.points.push_back(Point{x[0] + r * u[0], x[1] + r * u[1]});
      rule.weights.push_back(factor * gw[q] * dens * jac);
    }
  };

  if (!absolutely_continuous_2d(spec_)) {
    const Point dirs[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    for (int k = 0; k < 2 * grid_.dim; ++k) {
      const RayIntervals iv = ray_intervals(beyond, x, dirs[k], grid_.dim);
      const std::size_t first = rule.weights.size();
      radial(dirs[k], iv.v[0].a, 1.0, false);
      // Each ray carries its exact closed-form mass.
      double raw = 0.0;
      for (std::size_t q = first; q < rule.weights.size(); ++q) raw += rule.weights[q];
      const double exact = line_power_integral(spec_, iv.v[0].a, kInf, 0.0);
      for (std::size_t q = first; q < rule.weights.size(); ++q) rule.weights[q] *= exact / raw;
    }
    return rule;
  }

  const Cell& box = beyond.box;
  std::vector<double> cuts{0.0, 2.0 * kPi};
  for (double cx : {box.lo[0], box.hi[0]})
    for (double cy : {box.lo[1], box.hi[1]}) {
      double phi = std::atan2(cy - x[1], cx - x[0]);
      if (phi < 0.0) phi += 2.0 * kPi;
      cuts.push_back(phi);
    }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s];
    const double b = cuts[s + 1];
    if (b - a < 1e-14) continue;
    for (std::size_t p = 0; p < gx.size(); ++p) {
      const double phi = a + (b - a) * gx[p];
      const Point u{std::cos(phi), std::sin(phi)};
      double r0 = ray_intervals(beyond, x, u, 2).v[0].a;
      if (spec_.kind == MeasureKind::Cusp) r0 = std::max(r0, cusp_radius_threshold(spec_.s, fold_to_axis(phi)));
      radial(u, r0, (b - a) * gw[p], true);
    }
  }
  double raw = 0.0;
  for (double w : rule.weights) raw += w;
  if (raw > 0.0)
    for (double& w : rule.weights) w *= tail_[unknown] / raw;
  return rule;
}

double DiscreteOperator::tail_integral(std::size_t unknown, const ExteriorData& g, double t) const {
  if (g.constant && coeff_.trivial()) return *g.constant * tail_[unknown];
  const Point& x = grid_.nodes[grid_.interior_nodes[unknown]];
  const TailRule rule = tail_rule(unknown);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q)
    sum += rule.weights[q] * coeff_(t, x, rule.points[q]) * g(t, rule.points[q]);
  return sum;
}

double DiscreteOperator::tail_coefficient_mass(std::size_t unknown, double t) const {
  if (coeff_.trivial()) return tail_[unknown];
  const Point& x = grid_.nodes[grid_.interior_nodes[unknown]];
  const TailRule rule = tail_rule(unknown);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) sum += rule.weights[q] * coeff_(t, x, rule.points[q]);
  return sum;
}

double apply_row(const DiscreteOperator& op, std::span<const double> u, const ExteriorData& g, double t,
                 std::size_t unknown) {
  const Grid& grid = op.grid();
  const auto& coeff = op.coefficients();
  const std::size_t i = static_cast<std::size_t>(grid.interior_nodes[unknown]);
  const Point& xi = grid.nodes[i];
  const double ui = u[i];
  double s = 0.0;
  op.for_each_neighbour(i, [&](std::size_t j) {
    const double w = op.weight(i, j);
    if (w != 0.0) s += coeff(t, xi, grid.nodes[j]) * w * (u[j] - ui);
  });
  return s + op.tail_integral(unknown, g, t) - ui * op.tail_coefficient_mass(unknown, t);
}

std::vector<double> apply(const DiscreteOperator& op, std::span<const double> u, const ExteriorData& g, double t) {
  const Grid& grid = op.grid();
  require(u.size() == grid.size(), "apply: u must hold one value per box node");
  const std::size_t m = grid.interior_size();
  std::vector<double> out(m, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < m; ++k) out[k] = apply_row(op, u, g, t, k);
  return out;
}

double bilinear_form(const DiscreteOperator& op, std::span<const double> u, std::span<const double> v, double t,
                     const ExteriorData& gu, const ExteriorData& gv) {
  const Grid& grid = op.grid();
  require(u.size() == grid.size() && v.size() == grid.size(), "bilinear_form: one value per box node required");
  const auto& coeff = op.coefficients();
  const std::size_t m = grid.interior_size();
  std::vector<double> rows(m, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = static_cast<std::size_t>(grid.interior_nodes[k]);
    const Point& xi = grid.nodes[i];
    double s = 0.0;
    op.for_each_neighbour(i, [&](std::size_t j) {
      if (grid.is_interior(j) && j < i) return;  // interior pairs once
      const double w = op.weight(i, j);
      if (w != 0.0) s += coeff(t, xi, grid.nodes[j]) * w * (u[j] - u[i]) * (v[j] - v[i]);
    });
    if (gu.constant && gv.constant && coeff.trivial()) {
      s += (*gu.constant - u[i]) * (*gv.constant - v[i]) * op.tail_mass(k);
    } else {
      const TailRule rule = op.tail_rule(k);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Point& y = rule.points[q];
        s += rule.weights[q] * coeff(t, xi, y) * (gu(t, y) - u[i]) * (gv(t, y) - v[i]);
      }
    }
    rows[k] = s;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total * std::pow(grid.h, grid.dim);
}

std::vector<double> sample_nodes(const Grid& grid, const std::function<double(const Point&)>& f) {
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out[k] = f(grid.nodes[k]);
    require(std::isfinite(out[k]), "sampled function is not finite");
  }
  return out;
}

}  // namespace nllab
