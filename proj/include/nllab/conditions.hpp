#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nllab/measures.hpp"

namespace nllab {

enum class Condition { K1, K2, K3 };
const char* to_string(Condition c);

// Cell-centre grid of spacing dh restricted to a ball, used by the energy sums.
struct EnergyGrid {
  int dim = 1;
  Ball ball;
  double dh = 0.0;
  std::vector<Point> nodes;
};

// Nodes x0 - rho + (i + 1/2) dh whose distance to x0 is at most rho.
// Requires 2 rho / dh to be an integer.
EnergyGrid make_energy_grid(int dim, const Ball& ball, double dh);

using SpatialFunction = std::function<double(const Point&)>;

std::vector<double> sample(const EnergyGrid& grid, const SpatialFunction& v);

// Σ_j Σ_k (v_j - v_k)^2 w_jk with midpoint weights: density at x_j - y_k times dh^d
// (times dh on the shared line for Axes), and an outer factor dh^d. Diagonal excluded.
double discrete_energy(const MeasureSpec& spec, const EnergyGrid& grid, std::span<const double> v);

// (2 - a) Σ_j Σ_k (v_j - v_k)^2 |x_j - y_k|^{-d-a} dh^{2d} with a = effective order.
double canonical_energy(const MeasureSpec& spec, const EnergyGrid& grid, std::span<const double> v);

struct EnergySample {
  Ball ball;
  double dh = 0.0;
  std::vector<double> v;
  double e_mu = 0.0;
  double e_alpha_normalized = 0.0;
};

EnergySample energy_sample(const MeasureSpec& spec, const Ball& ball, const SpatialFunction& v, double dh);

struct ConditionReport {
  Condition condition = Condition::K1;
  std::vector<double> scales;           // rho (K1), dh (K2), evaluation points' |x| (K3)
  std::vector<double> measured_values;  // K1 values, K2 lambda per dh, K3 tail integrals
  double lambda_measured = 0.0;
  double budget = 0.0;
  bool pass = false;

  // K2 detail: ratios[scale][function], with per-scale extrema.
  std::vector<std::vector<double>> ratios;
  std::vector<double> upper_ratio;
  std::vector<double> lower_ratio;
  double refinement_drift = 0.0;  // relative change of lambda between the last two scales
  bool reverified = false;        // both sandwich inequalities re-checked literally

  // K3 detail.
  double delta = 0.0;
  double c0_measured = 0.0;
  bool divergent = false;
};

ConditionReport check_k1(const MeasureSpec& spec, const std::vector<double>& rho_list, double budget);

// Test functions are expressed in coordinates normalized to the ball: s = (x - x0) / rho.
struct NamedFunction {
  std::string name;
  SpatialFunction fn;
};

// Cosine modes up to frequency 4 (constant excluded), three seeded random piecewise
// linear functions and the radial function |x - x0|.
std::vector<NamedFunction> default_k2_suite(int dim, const Ball& ball, std::uint64_t seed);

// Random Lipschitz functions: sums of seeded tent functions.
std::vector<NamedFunction> random_lipschitz_suite(int dim, const Ball& ball, int count, std::uint64_t seed);

ConditionReport check_k2(const MeasureSpec& spec, const Ball& ball, const std::vector<double>& dh_list,
                         const std::vector<NamedFunction>& suite, double budget);

// Sup over a grid of x in the closed ball B_2(0) of ∫_{R^d \ B_3(0)} |x-y|^delta mu(x,dy).
ConditionReport check_k3(const MeasureSpec& spec, double delta, double budget);

// Intermediate energy chain for the axes measure in d = 2 on one ball.
struct AxesBridge {
  double n = 0.0;          // N = 2 rho / dh
  double e_axes = 0.0;     // Σ_j Σ_{k ~ j} v_jk^2 / r^{1+a} dh^3
  double f = 0.0;          // Σ_j Σ_k v_jk^2 / r^{1+a} dh^3
  double e_alpha = 0.0;    // Σ_j Σ_k v_jk^2 / r^{2+a} dh^4
};
AxesBridge axes_bridge(double alpha, const EnergyGrid& grid, std::span<const double> v);

}  // namespace nllab
