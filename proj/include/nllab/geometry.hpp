#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <variant>

namespace nllab {

// Points are stored with two coordinates; in one dimension the second is zero.
using Point = std::array<double, 2>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

inline double norm(const Point& p, int dim) {
  return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}
inline double distance(const Point& a, const Point& b, int dim) {
  return norm(Point{a[0] - b[0], a[1] - b[1]}, dim);
}

struct Ball {
  Point center{};
  double radius = 0.0;
};

struct Annulus {
  Point center{};
  double inner = 0.0;
  double outer = 0.0;
};

// Axis-aligned box [lo, hi]. In one dimension only the first coordinate is used.
struct Cell {
  Point lo{};
  Point hi{};
};

// Complement of a ball.
struct Complement {
  Ball ball;
};

// Complement of an axis-aligned box; used for the far field of a computational box.
struct BoxComplement {
  Cell box;
};

using SetDescriptor = std::variant<Ball, Annulus, Cell, Complement, BoxComplement>;

// Validates radii and box orientation; throws InvalidInput otherwise.
void validate_set(const SetDescriptor& set, int dim);

// Closed interval [a, b] of ray parameters; b may be +inf.
struct RayInterval {
  double a = 0.0;
  double b = 0.0;
};

// At most two disjoint intervals arise for the supported sets.
struct RayIntervals {
  std::array<RayInterval, 2> v{};
  int n = 0;
  void push(double a, double b) {
    if (b > a) v[n++] = {a, b};
  }
};

// Parameters r >= 0 such that x + r*u lies in the set. u must be a unit vector;
// in one dimension u is (+1,0) or (-1,0).
RayIntervals ray_intervals(const SetDescriptor& set, const Point& x, const Point& u, int dim);

// True if x lies in the closure of the set.
bool touches(const SetDescriptor& set, const Point& x, int dim);

// Lebesgue measure of cell ∩ ball (length in 1-D, area in 2-D).
double cell_ball_overlap(const Cell& cell, const Ball& ball, int dim);

}  // namespace nllab
