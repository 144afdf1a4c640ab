#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nllab/error.hpp"
#include "nllab/solver.hpp"

namespace nllab::detail {

// max |f| over grid points of the closure of Q = (-1, 1) x B_2(0).
inline double source_sup(const SpaceTimeFunction& u, const SourceTerm& f) {
  if (!f) return 0.0;
  const Grid& grid = u.grid();
  const double tol = 1e-9 * u.dt;
  double m = 0.0;
  for (double t : u.times) {
    if (t < -1.0 - tol || t > 1.0 + tol) continue;
    for (const Point& x : grid.nodes) {
      if (norm(x, grid.dim) > 2.0 * (1.0 + 1e-12)) continue;
      const double v = f(t, x);
      require(std::isfinite(v), "source term is not finite");
      m = std::max(m, std::abs(v));
    }
  }
  return m;
}

// Weighted space-time sum Σ_k tw_k Σ_i sw_i fn(level, node).
template <class F>
double cylinder_sum(const CylinderWeights& w, F&& fn) {
  double total = 0.0;
  for (std::size_t a = 0; a < w.time_steps.size(); ++a) {
    double inner = 0.0;
    for (std::size_t b = 0; b < w.space_nodes.size(); ++b)
      inner += w.space_weights[b] * fn(w.time_steps[a], w.space_nodes[b]);
    total += w.time_weights[a] * inner;
  }
  return total;
}

// Applies fn to every grid point that carries weight or lies in the closed cylinder.
template <class F>
void for_each_cylinder_point(const CylinderWeights& w, F&& fn) {
  std::vector<std::size_t> steps = w.time_steps;
  steps.insert(steps.end(), w.closed_time_steps.begin(), w.closed_time_steps.end());
  std::vector<std::size_t> nodes = w.space_nodes;
  nodes.insert(nodes.end(), w.closed_space_nodes.begin(), w.closed_space_nodes.end());
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (std::size_t k : steps)
    for (std::size_t i : nodes) fn(k, i);
}

// Values of u + shift that must be positive; throws InvalidInput otherwise.
inline double shifted(const SpaceTimeFunction& u, std::size_t level, std::size_t node, double shift) {
  const double v = u.at(level, node) + shift;
  require(v > 0.0 && std::isfinite(v), "u + ‖f‖ + epsilon must be positive and finite");
  return v;
}

}  // namespace nllab::detail
