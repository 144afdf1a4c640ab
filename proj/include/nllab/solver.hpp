#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nllab/discrete_operator.hpp"

namespace nllab {

using SourceTerm = std::function<double(double, const Point&)>;

// Initial value problem for du/dt - Lu = f in the domain of the operator's grid, with
// u = g outside the domain.
struct IvpConfig {
  std::shared_ptr<const DiscreteOperator> op;
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 0.01;      // (t1 - t0) / dt must be an integer
  double theta = 1.0;    // in [1/2, 1]; 1 is implicit Euler
  // Initial values at the unknowns: either a function of x or one value per unknown.
  std::function<double(const Point&)> u0;
  std::vector<double> u0_values;
  ExteriorData g = ExteriorData::zero();
  SourceTerm f;          // empty means f = 0
  double tolerance = 1e-10;  // relative residual of each conjugate-gradient solve
  int max_iterations = 0;    // 0 picks 10 * (number of unknowns)

  void validate() const;
};

// u(t_k, x_i) on a uniform time grid. Values are stored at the unknowns only; box nodes
// outside the domain take the exterior data.
struct SpaceTimeFunction {
  std::shared_ptr<const DiscreteOperator> op;
  std::vector<double> times;
  std::vector<std::vector<double>> interior;  // [level][unknown]
  ExteriorData exterior = ExteriorData::zero();
  double dt = 0.0;
  double theta = 1.0;
  // Euclidean norm of M U^{k+1} - rhs after the solve of step k (empty if not produced by solve).
  std::vector<double> step_residuals;

  const Grid& grid() const { return op->grid(); }
  std::size_t levels() const { return times.size(); }
  double at(std::size_t level, std::size_t node) const;
  // Values on every box node at one level.
  std::vector<double> snapshot(std::size_t level) const;
  // Index of the level equal to t (to 1e-9 dt), or InvalidInput.
  std::size_t level_of(double t) const;
  // Multiplies values and exterior data by lambda.
  SpaceTimeFunction scaled(double lambda) const;

  static SpaceTimeFunction constant(std::shared_ptr<const DiscreteOperator> op, std::vector<double> times, double c);
};

struct SolveStats {
  std::size_t steps = 0;
  std::size_t total_iterations = 0;
  std::size_t max_iterations = 0;
  double max_relative_residual = 0.0;
  bool sparse = false;
};

// Theta-scheme (u^{k+1} - u^k)/dt = theta L u^{k+1} + (1 - theta) L u^k + f(t_k + theta dt),
// one conjugate-gradient solve per step. Throws NumericalFailure if a solve stalls.
SpaceTimeFunction solve(const IvpConfig& cfg, SolveStats* stats = nullptr);

// Long-time limit for time-independent data: implicit Euler steps of length dt until the
// relative max-norm change per step falls below change_tol or max_steps is reached.
struct StationaryResult {
  std::vector<double> interior;
  double relative_change = 0.0;
  std::size_t steps = 0;
  bool converged = false;
};
StationaryResult solve_stationary(std::shared_ptr<const DiscreteOperator> op, const ExteriorData& g, double dt,
                                  double change_tol, std::size_t max_steps, double tolerance = 1e-12);

// Space-time test function phi(t, x) that vanishes outside a ball compactly inside the domain.
struct TestFunction {
  std::function<double(double, const Point&)> phi;
  Ball support;

  // (1 - |x - c|^2 / r^2)_+^3 times a positive time profile 1 + a sin(w t + p), |a| < 1.
  static TestFunction bump(const Ball& support, int dim, double a = 0.0, double w = 0.0, double p = 0.0);
};

struct WeakFormResidual {
  double t1 = 0.0;
  double t2 = 0.0;
  // <phi, u>(t2) - <phi, u>(t1) - ∬ u dphi/dt + ∫ E_t(u, phi) dt - ∬ f phi: trapezoid rule in t
  // for u, E and f, with exact increments of phi on each step.
  double lhs_minus_rhs = 0.0;
  // The same quantity in the form that the theta-scheme satisfies exactly.
  double scheme_residual = 0.0;
  // Contribution of the linear-solver residuals to scheme_residual.
  double solver_term = 0.0;
  // |lhs_minus_rhs - scheme_residual| + solver_term + roundoff allowance.
  double epsilon_scheme = 0.0;
  // max |phi| times the space-time volume of its support; for scale.
  double phi_scale = 0.0;
  bool supersolution = false;  // lhs_minus_rhs >= -epsilon_scheme
};

// t1 and t2 must be levels of u. The energy enters through E_t(u, phi) = -<Lu, phi>_h, which
// holds because phi vanishes off the domain. phi must be nonnegative when nonnegative_phi is set.
WeakFormResidual weak_residual(const SpaceTimeFunction& u, const DiscreteOperator& op, const TestFunction& phi,
                               double t1, double t2, const SourceTerm& f = {}, bool nonnegative_phi = true);

struct SupersolutionOptions {
  double t0 = -1.25;
  double t1 = 1.0;
  double dt = 1.0 / 128;
  double theta = 1.0;
  double tolerance = 1e-11;
  int certificates = 3;       // random test functions per sample
  int max_attempts = 0;       // 0 picks 3 * count
};

struct SupersolutionBatch {
  std::vector<SpaceTimeFunction> samples;
  std::vector<std::string> discarded;  // reason for each rejected candidate
  std::vector<WeakFormResidual> certificates;
};

// Solutions of the equation with f = 0 and random nonnegative initial and exterior data
// (bumps, plateaus, masses concentrated along a coordinate axis), each certified by
// weak_residual on random nonnegative test functions. Deterministic in seed.
SupersolutionBatch make_test_supersolutions(std::shared_ptr<const DiscreteOperator> op, std::uint64_t seed, int count,
                                            const SupersolutionOptions& options = {});

}  // namespace nllab
