#pragma once

#include <cstddef>
#include <vector>

#include "nllab/geometry.hpp"

namespace nllab {

// Uniform grid on the box [-L, L]^d with nodes -L + i h. Nodes strictly inside the
// ball B_omega(c) are the unknowns of the equation; the rest carry exterior data.
struct Grid {
  int dim = 1;
  double box_radius = 1.0;
  double h = 0.0;
  double omega_radius = 1.0;
  Point omega_center{};
  int n = 0;  // nodes per axis

  std::vector<Point> nodes;
  std::vector<unsigned char> interior_mask;
  std::vector<int> interior_nodes;   // node index of each unknown
  std::vector<int> unknown_index;    // node -> unknown, or -1

  std::size_t size() const { return nodes.size(); }
  std::size_t interior_size() const { return interior_nodes.size(); }
  bool is_interior(std::size_t node) const { return interior_mask[node] != 0; }

  int axis_index(std::size_t node, int axis) const {
    return axis == 0 ? static_cast<int>(node % static_cast<std::size_t>(n))
                     : static_cast<int>(node / static_cast<std::size_t>(n));
  }
  std::size_t node_at(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * static_cast<std::size_t>(j);
  }

  // Cell [x - h/2, x + h/2]^d of a node.
  Cell cell(std::size_t node) const;
  // The region covered by all node cells, [-L - h/2, L + h/2]^d.
  Cell outer_box() const;
};

// box_radius / h must be an integer (to 1e-9) and the domain ball must lie in the box.
Grid make_grid(int dim, double box_radius, double h, double omega_radius, const Point& omega_center = {});

enum class CylinderKind { Qr, Qplus, Qminus, Uplus, Uminus };
const char* to_string(CylinderKind kind);

// Space-time cylinder (t_lo, t_hi) x B_r(center).
struct Cylinder {
  CylinderKind kind = CylinderKind::Qr;
  double alpha = 1.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  Ball ball;

  double duration() const { return t_hi - t_lo; }
  // Lebesgue measure |I| * |B|.
  double volume(int dim) const;
  bool contains(double t, const Point& x, int dim) const;
};

// Q_r(x0, t0) = (t0 - r^a, t0 + r^a) x B_r(x0).
Cylinder make_qr(const Point& x0, double t0, double r, double alpha);
// Q+(r) = (0, r^a) x B_r(0) and Q-(r) = (-r^a, 0) x B_r(0).
Cylinder make_qplus(double r, double alpha);
Cylinder make_qminus(double r, double alpha);
// U+ = (1 - 2^-a, 1) x B_1/2(0) and U- = (-1, -1 + 2^-a) x B_1/2(0).
Cylinder make_uplus(double alpha);
Cylinder make_uminus(double alpha);

// Exact quadrature weights of a cylinder on a space-time grid: the spatial weight of a
// node is |cell ∩ B| and the temporal weight of t_k is |[t_k - dt/2, t_k + dt/2] ∩ I|,
// with the cells of the first and last time node clipped to [times.front(), times.back()].
struct CylinderWeights {
  std::vector<std::size_t> space_nodes;
  std::vector<double> space_weights;
  std::vector<std::size_t> time_steps;
  std::vector<double> time_weights;
  // Node pairs used for essential infima: nodes with |x - x0| <= r and t_k in [t_lo, t_hi].
  std::vector<std::size_t> closed_space_nodes;
  std::vector<std::size_t> closed_time_steps;
};

CylinderWeights cylinder_weights(const Cylinder& cyl, const Grid& grid, const std::vector<double>& times);

}  // namespace nllab
