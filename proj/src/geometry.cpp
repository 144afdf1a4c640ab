#include "nllab/geometry.hpp"

#include <algorithm>
#include <vector>

#include "nllab/error.hpp"

namespace nllab {

namespace {

RayIntervals ball_interval(const Ball& ball, const Point& x, const Point& u, int dim) {
  RayIntervals out;
  const double dx = x[0] - ball.center[0];
  const double dy = dim == 2 ? x[1] - ball.center[1] : 0.0;
  const double b = u[0] * dx + (dim == 2 ? u[1] * dy : 0.0);
  const double c = dx * dx + dy * dy - ball.radius * ball.radius;
  const double disc = b * b - c;
  if (disc <= 0.0) return out;
  const double root = std::sqrt(disc);
  const double hi = -b + root;
  if (hi <= 0.0) return out;
  out.push(std::max(0.0, -b - root), hi);
  return out;
}

RayIntervals box_interval(const Cell& box, const Point& x, const Point& u, int dim) {
  RayIntervals out;
  double lo = 0.0;
  double hi = kInf;
  for (int i = 0; i < dim; ++i) {
    if (std::abs(u[i]) < 1e-300) {
      if (x[i] < box.lo[i] || x[i] > box.hi[i]) return out;
      continue;
    }
    double t1 = (box.lo[i] - x[i]) / u[i];
    double t2 = (box.hi[i] - x[i]) / u[i];
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
  }
  if (hi > lo) out.push(lo, hi);
  return out;
}

// [0, inf) minus a single interval.
RayIntervals complement_of(const RayIntervals& inside) {
  RayIntervals out;
  if (inside.n == 0) {
    out.push(0.0, kInf);
    return out;
  }
  out.push(0.0, inside.v[0].a);
  out.push(inside.v[0].b, kInf);
  return out;
}

// Interval difference [a, b] \ [c, d] for one interval each.
RayIntervals difference(const RayIntervals& outer, const RayIntervals& inner) {
  if (outer.n == 0) return outer;
  if (inner.n == 0) return outer;
  RayIntervals out;
  const auto& o = outer.v[0];
  const auto& i = inner.v[0];
  out.push(o.a, std::min(o.b, i.a));
  out.push(std::max(o.a, i.b), o.b);
  return out;
}

}  // namespace

void validate_set(const SetDescriptor& set, int dim) {
  require(dim == 1 || dim == 2, "dimension must be 1 or 2");
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          require(s.radius > 0.0 && std::isfinite(s.radius), "ball radius must be positive");
        } else if constexpr (std::is_same_v<T, Annulus>) {
          require(s.inner > 0.0 && s.outer >= s.inner, "annulus needs 0 < r <= R");
        } else if constexpr (std::is_same_v<T, Complement>) {
          require(s.ball.radius > 0.0, "complement ball radius must be positive");
        } else if constexpr (std::is_same_v<T, Cell>) {
          for (int i = 0; i < dim; ++i) require(s.hi[i] > s.lo[i], "cell must have positive extent");
        } else {
          for (int i = 0; i < dim; ++i) require(s.box.hi[i] > s.box.lo[i], "box must have positive extent");
        }
      },
      set);
}

RayIntervals ray_intervals(const SetDescriptor& set, const Point& x, const Point& u, int dim) {
  return std::visit(
      [&](const auto& s) -> RayIntervals {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return ball_interval(s, x, u, dim);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return difference(ball_interval(Ball{s.center, s.outer}, x, u, dim),
                            ball_interval(Ball{s.center, s.inner}, x, u, dim));
        } else if constexpr (std::is_same_v<T, Cell>) {
          return box_interval(s, x, u, dim);
        } else if constexpr (std::is_same_v<T, Complement>) {
          return complement_of(ball_interval(s.ball, x, u, dim));
        } else {
          return complement_of(box_interval(s.box, x, u, dim));
        }
      },
      set);
}

bool touches(const SetDescriptor& set, const Point& x, int dim) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return distance(x, s.center, dim) <= s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          const double r = distance(x, s.center, dim);
          return s.outer > s.inner && r >= s.inner && r <= s.outer;
        } else if constexpr (std::is_same_v<T, Cell>) {
          for (int i = 0; i < dim; ++i)
            if (x[i] < s.lo[i] || x[i] > s.hi[i]) return false;
          return true;
        } else if constexpr (std::is_same_v<T, Complement>) {
          return distance(x, s.ball.center, dim) >= s.ball.radius;
        } else {
          for (int i = 0; i < dim; ++i)
            if (x[i] <= s.box.lo[i] || x[i] >= s.box.hi[i]) return true;
          return false;
        }
      },
      set);
}

double cell_ball_overlap(const Cell& cell, const Ball& ball, int dim) {
  if (dim == 1) {
    const double lo = std::max(cell.lo[0], ball.center[0] - ball.radius);
    const double hi = std::min(cell.hi[0], ball.center[0] + ball.radius);
    return std::max(0.0, hi - lo);
  }
  const double R = ball.radius;
  const double x0 = std::max(cell.lo[0], ball.center[0] - R) - ball.center[0];
  const double x1 = std::min(cell.hi[0], ball.center[0] + R) - ball.center[0];
  if (x1 <= x0) return 0.0;
  const double y0 = cell.lo[1] - ball.center[1];
  const double y1 = cell.hi[1] - ball.center[1];
  // Chord length of the disk column at abscissa x, clipped to [y0, y1].
  auto chord = [&](double x) {
    const double half = std::sqrt(std::max(0.0, R * R - x * x));
    return std::max(0.0, std::min(y1, half) - std::max(y0, -half));
  };
  // Breakpoints where the circle crosses the horizontal cell edges.
  std::vector<double> cuts{x0, x1};
  for (double y : {y0, y1}) {
    if (std::abs(y) < R) {
      const double xc = std::sqrt(R * R - y * y);
      for (double c : {-xc, xc})
        if (c > x0 && c < x1) cuts.push_back(c);
    }
  }
  if (x0 < 0.0 && x1 > 0.0) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  // On each piece the clipped chord is a fixed combination of constants and the
  // half-chord sqrt(R^2 - x^2), whose antiderivative is known in closed form.
  auto half_primitive = [R](double x) {
    const double c = std::clamp(x / R, -1.0, 1.0);
    return 0.5 * (x * std::sqrt(std::max(0.0, R * R - x * x)) + R * R * std::asin(c));
  };
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    if (b <= a) continue;
    const double m = 0.5 * (a + b);
    const double half = std::sqrt(std::max(0.0, R * R - m * m));
    if (chord(m) <= 0.0) continue;
    const bool top_clipped = y1 < half;
    const bool bottom_clipped = y0 > -half;
    const double hp = half_primitive(b) - half_primitive(a);
    double piece = 0.0;
    piece += top_clipped ? y1 * (b - a) : hp;
    piece -= bottom_clipped ? y0 * (b - a) : -hp;
    area += piece;
  }
  return area;
}

}  // namespace nllab
