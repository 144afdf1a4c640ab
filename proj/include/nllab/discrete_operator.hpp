#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nllab/grid.hpp"
#include "nllab/measures.hpp"

namespace nllab {

// Coefficient a(t, x, y) with values in [1, 2] and a(t, x, y) = a(t, y, x).
// An empty function means a = 1.
struct EquationCoefficients {
  std::function<double(double, const Point&, const Point&)> a;
  bool time_dependent = false;

  bool trivial() const { return !a; }
  double operator()(double t, const Point& x, const Point& y) const { return a ? a(t, x, y) : 1.0; }
  // Samples the grid and throws InvalidInput if the range or symmetry is violated.
  void validate(const Grid& grid, double t0, double t1, std::uint64_t seed = 1) const;
};

// Exterior data g(t, x). Used on box nodes outside the domain and beyond the box.
struct ExteriorData {
  std::function<double(double, const Point&)> fn;
  bool time_independent = true;
  std::optional<double> constant;

  double operator()(double t, const Point& x) const { return constant ? *constant : fn(t, x); }

  static ExteriorData zero() { return constant_value(0.0); }
  static ExteriorData constant_value(double c);
  static ExteriorData function(std::function<double(double, const Point&)> g, bool time_independent);
};

struct OperatorOptions {
  // Cells with max-norm offset up to this radius get exact measure_of_set masses; farther
  // cells use a 4x4 Gauss-Legendre rule of the density (d = 2 absolutely continuous kinds).
  int exact_radius = 8;
  // The quadratic-exactness correction compares the stencil with the exact second
  // moment over the square of half-width (correction_radius + 1/2) h. A negative value
  // uses the whole stencil, which removes the O(h^{2-a}) far-cell bias.
  int correction_radius = -1;
};

// Quadrature nodes of the measure beyond the box, for one interior node.
struct TailRule {
  std::vector<Point> points;
  std::vector<double> weights;  // sum equals the exact tail mass
};

// Translation-invariant stencil of cell masses w(m) = mu(0, cell(m h)), plus the
// quadratic-exactness correction on the nearest neighbours and the exact mass of the
// measure beyond the box for every interior node.
class DiscreteOperator {
 public:
  DiscreteOperator(MeasureSpec spec, Grid grid, EquationCoefficients coeff = {}, OperatorOptions options = {});

  const MeasureSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }
  const EquationCoefficients& coefficients() const { return coeff_; }
  const OperatorOptions& options() const { return options_; }

  // Weight between two distinct box nodes (correction included).
  double weight(std::size_t i, std::size_t j) const { return stencil_[offset_index(i, j)]; }
  // Cell mass without the nearest-neighbour correction.
  double raw_weight(std::size_t i, std::size_t j) const { return raw_[offset_index(i, j)]; }
  // Added weight on each of the 2d nearest neighbours.
  double correction() const { return correction_; }
  // Mass of R^d minus the outer box, seen from the k-th unknown.
  double tail_mass(std::size_t unknown) const { return tail_[unknown]; }
  // True if only node pairs on a common coordinate line interact.
  bool line_supported() const { return line_supported_; }
  double weight_by_offset(int m1, int m2 = 0) const;

  TailRule tail_rule(std::size_t unknown) const;
  // ∫_{beyond box} a(t,x,y) g(t,y) mu(x,dy) for the k-th unknown.
  double tail_integral(std::size_t unknown, const ExteriorData& g, double t) const;
  // ∫_{beyond box} a(t,x,y) mu(x,dy).
  double tail_coefficient_mass(std::size_t unknown, double t) const;

  // Nodes interacting with box node i (all other nodes, or the two lines through i).
  template <class F>
  void for_each_neighbour(std::size_t i, F&& f) const;

 private:
  std::size_t offset_index(std::size_t i, std::size_t j) const;
  void build_stencil();
  void build_tails();

  MeasureSpec spec_;
  Grid grid_;
  EquationCoefficients coeff_;
  OperatorOptions options_;
  int span_ = 0;  // 2n - 1
  std::vector<double> raw_;
  std::vector<double> stencil_;
  std::vector<double> tail_;
  double correction_ = 0.0;
  bool line_supported_ = false;
};

template <class F>
void DiscreteOperator::for_each_neighbour(std::size_t i, F&& f) const {
  const std::size_t total = grid_.size();
  if (!line_supported_ || grid_.dim == 1) {
    for (std::size_t j = 0; j < total; ++j)
      if (j != i) f(j);
    return;
  }
  const int n = grid_.n;
  const int ix = grid_.axis_index(i, 0);
  const int iy = grid_.axis_index(i, 1);
  for (int a = 0; a < n; ++a)
    if (a != ix) f(grid_.node_at(a, iy));
  for (int b = 0; b < n; ++b)
    if (b != iy) f(grid_.node_at(ix, b));
}

// (L u)(x_k) for every unknown k: Σ_j a w_kj (u_j - u_k) over box nodes plus the tail
// ∫ a (g(y) - u_k) mu(x_k, dy) beyond the box. u holds values on all box nodes.
std::vector<double> apply(const DiscreteOperator& op, std::span<const double> u, const ExteriorData& g, double t);
// One entry of apply, for the given unknown.
double apply_row(const DiscreteOperator& op, std::span<const double> u, const ExteriorData& g, double t,
                 std::size_t unknown);

// E_t(u, v) = Σ over unordered node pairs with at least one endpoint in the domain of
// (u_j - u_i)(v_j - v_i) a w_ij h^d, plus the pairs (domain node, point beyond the box)
// with u = gu and v = gv there. E_t(u, phi) = -<Lu, phi>_h whenever phi vanishes off the domain.
double bilinear_form(const DiscreteOperator& op, std::span<const double> u, std::span<const double> v, double t,
                     const ExteriorData& gu, const ExteriorData& gv);

// Values of f at every box node.
std::vector<double> sample_nodes(const Grid& grid, const std::function<double(const Point&)>& f);

}  // namespace nllab
