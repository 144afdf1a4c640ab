#include "nllab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nllab/error.hpp"

namespace nllab {

Cell Grid::cell(std::size_t node) const {
  const Point& x = nodes[node];
  const double half = 0.5 * h;
  return Cell{{x[0] - half, dim == 2 ? x[1] - half : 0.0}, {x[0] + half, dim == 2 ? x[1] + half : 0.0}};
}

Cell Grid::outer_box() const {
  const double e = box_radius + 0.5 * h;
  return Cell{{-e, dim == 2 ? -e : 0.0}, {e, dim == 2 ? e : 0.0}};
}

Grid make_grid(int dim, double box_radius, double h, double omega_radius, const Point& omega_center) {
  require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
  require(h > 0.0 && std::isfinite(h), "grid spacing h must be positive");
  require(box_radius > 0.0 && std::isfinite(box_radius), "box_radius must be positive");
  const double cells = box_radius / h;
  const double rounded = std::round(cells);
  require(std::abs(cells - rounded) <= 1e-9 * std::max(1.0, cells),
          "box_radius / h must be an integer, got " + std::to_string(cells));
  require(omega_radius > 0.0, "domain radius must be positive");
  require(dim == 2 || omega_center[1] == 0.0, "a one-dimensional domain centre has no second coordinate");
  for (int a = 0; a < dim; ++a)
    require(std::abs(omega_center[static_cast<std::size_t>(a)]) + omega_radius <= box_radius * (1.0 + 1e-12),
            "the domain ball must lie inside the box");
  require(rounded <= 1 << 14, "grid too large");

  Grid g;
  g.dim = dim;
  g.box_radius = box_radius;
  g.h = h;
  g.omega_radius = omega_radius;
  g.omega_center = omega_center;
  g.n = 2 * static_cast<int>(rounded) + 1;
  const int half = static_cast<int>(rounded);
  const std::size_t total = dim == 1 ? g.n : static_cast<std::size_t>(g.n) * g.n;
  g.nodes.resize(total);
  g.interior_mask.assign(total, 0);
  g.unknown_index.assign(total, -1);
  // Strict interior, with a relative guard so nodes on the sphere count as exterior.
  const double limit = omega_radius - 1e-9 * h;
  for (std::size_t k = 0; k < total; ++k) {
    const int i = static_cast<int>(k % g.n);
    const int j = static_cast<int>(k / g.n);
    Point x{(i - half) * h, dim == 2 ? (j - half) * h : 0.0};
    g.nodes[k] = x;
    if (distance(x, omega_center, dim) < limit) {
      g.interior_mask[k] = 1;
      g.unknown_index[k] = static_cast<int>(g.interior_nodes.size());
      g.interior_nodes.push_back(static_cast<int>(k));
    }
  }
  require(!g.interior_nodes.empty(), "domain contains no grid nodes");
  return g;
}

const char* to_string(CylinderKind kind) {
  switch (kind) {
    case CylinderKind::Qr: return "Qr";
    case CylinderKind::Qplus: return "Qplus";
    case CylinderKind::Qminus: return "Qminus";
    case CylinderKind::Uplus: return "Uplus";
    case CylinderKind::Uminus: return "Uminus";
  }
  return "?";
}

double Cylinder::volume(int dim) const {
  const double r = ball.radius;
  const double space = dim == 1 ? 2.0 * r : kPi * r * r;
  return duration() * space;
}

bool Cylinder::contains(double t, const Point& x, int dim) const {
  return t > t_lo && t < t_hi && distance(x, ball.center, dim) < ball.radius;
}

namespace {
Cylinder make(CylinderKind kind, double alpha, double lo, double hi, const Point& c, double r) {
  require(alpha > 0.0 && alpha < 2.0, "cylinder order alpha must lie in (0, 2)");
  require(r > 0.0, "cylinder radius must be positive");
  Cylinder cyl;
  cyl.kind = kind;
  cyl.alpha = alpha;
  cyl.t_lo = lo;
  cyl.t_hi = hi;
  cyl.ball = Ball{c, r};
  return cyl;
}
}  // namespace

Cylinder make_qr(const Point& x0, double t0, double r, double alpha) {
  const double len = std::pow(r, alpha);
  return make(CylinderKind::Qr, alpha, t0 - len, t0 + len, x0, r);
}
Cylinder make_qplus(double r, double alpha) {
  return make(CylinderKind::Qplus, alpha, 0.0, std::pow(r, alpha), Point{}, r);
}
Cylinder make_qminus(double r, double alpha) {
  return make(CylinderKind::Qminus, alpha, -std::pow(r, alpha), 0.0, Point{}, r);
}
Cylinder make_uplus(double alpha) {
  return make(CylinderKind::Uplus, alpha, 1.0 - std::pow(0.5, alpha), 1.0, Point{}, 0.5);
}
Cylinder make_uminus(double alpha) {
  return make(CylinderKind::Uminus, alpha, -1.0, -1.0 + std::pow(0.5, alpha), Point{}, 0.5);
}

CylinderWeights cylinder_weights(const Cylinder& cyl, const Grid& grid, const std::vector<double>& times) {
  require(times.size() >= 2, "at least two time levels are needed");
  const double tol = 1e-12 * std::max(1.0, std::abs(times.back()));
  require(times.front() <= cyl.t_lo + tol && times.back() >= cyl.t_hi - tol,
          "the time grid does not cover the cylinder");
  CylinderWeights w;
  const double reach = cyl.ball.radius + grid.h;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double dist = distance(grid.nodes[k], cyl.ball.center, grid.dim);
    if (dist > reach) continue;
    const double a = cell_ball_overlap(grid.cell(k), cyl.ball, grid.dim);
    if (a > 0.0) {
      w.space_nodes.push_back(k);
      w.space_weights.push_back(a);
    }
    if (dist <= cyl.ball.radius * (1.0 + 1e-12)) w.closed_space_nodes.push_back(k);
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double left = k == 0 ? times[0] : 0.5 * (times[k - 1] + times[k]);
    const double right = k + 1 == times.size() ? times[k] : 0.5 * (times[k] + times[k + 1]);
    const double overlap = std::min(right, cyl.t_hi) - std::max(left, cyl.t_lo);
    if (overlap > 0.0) {
      w.time_steps.push_back(k);
      w.time_weights.push_back(overlap);
    }
    if (times[k] >= cyl.t_lo - tol && times[k] <= cyl.t_hi + tol) w.closed_time_steps.push_back(k);
  }
  return w;
}

}  // namespace nllab
