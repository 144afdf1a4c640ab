#include "nllab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "nllab/error.hpp"

namespace nllab {

namespace {

using Vec = Eigen::VectorXd;
using Dense = Eigen::MatrixXd;
using Sparse = Eigen::SparseMatrix<double>;

// Dense storage above this many unknowns would need more than about half a gigabyte.
constexpr std::size_t kDenseLimit = 8192;

// L restricted to the unknowns: off-diagonal a w_ij between unknowns, diagonal minus the
// full row mass (box nodes and tail).
struct InteriorMatrix {
  bool sparse = false;
  Dense dense;
  Sparse sp;

  Vec operator*(const Vec& x) const { return sparse ? Vec(sp * x) : Vec(dense * x); }
};

InteriorMatrix assemble_interior(const DiscreteOperator& op, double t) {
  const Grid& grid = op.grid();
  const auto& coeff = op.coefficients();
  const std::size_t m = grid.interior_size();
  InteriorMatrix out;
  out.sparse = op.line_supported() && grid.dim == 2;
  if (!out.sparse) {
    if (m > kDenseLimit)
      fail(ErrorCode::InvalidInput, "too many unknowns (" + std::to_string(m) +
                                        ") for the dense system of a fully coupled kernel; coarsen the grid");
    out.dense.setZero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  }
  std::vector<std::vector<Eigen::Triplet<double>>> rows(out.sparse ? m : 0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = static_cast<std::size_t>(grid.interior_nodes[k]);
    const Point& xi = grid.nodes[i];
    double diag = -op.tail_coefficient_mass(k, t);
    op.for_each_neighbour(i, [&](std::size_t j) {
      const double w = op.weight(i, j);
      if (w == 0.0) return;
      const double v = coeff(t, xi, grid.nodes[j]) * w;
      diag -= v;
      const int col = grid.unknown_index[j];
      if (col < 0) return;
      if (out.sparse)
        rows[k].emplace_back(static_cast<int>(k), col, v);
      else
        out.dense(static_cast<Eigen::Index>(k), col) = v;
    });
    if (out.sparse)
      rows[k].emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
    else
      out.dense(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = diag;
  }
  if (out.sparse) {
    std::vector<Eigen::Triplet<double>> all;
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    out.sp.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    out.sp.setFromTriplets(all.begin(), all.end());
  }
  return out;
}

// Contribution of the exterior data to Lu: box nodes outside the domain plus the tail.
Vec boundary_vector(const DiscreteOperator& op, const ExteriorData& g, double t) {
  const Grid& grid = op.grid();
  const auto& coeff = op.coefficients();
  const std::size_t m = grid.interior_size();
  std::vector<double> gval(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (!grid.is_interior(j)) gval[j] = g(t, grid.nodes[j]);
  Vec b(static_cast<Eigen::Index>(m));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = static_cast<std::size_t>(grid.interior_nodes[k]);
    const Point& xi = grid.nodes[i];
    double s = op.tail_integral(k, g, t);
    op.for_each_neighbour(i, [&](std::size_t j) {
      if (grid.is_interior(j)) return;
      const double w = op.weight(i, j);
      if (w != 0.0) s += coeff(t, xi, grid.nodes[j]) * w * gval[j];
    });
    b[static_cast<Eigen::Index>(k)] = s;
  }
  return b;
}

Vec source_vector(const Grid& grid, const SourceTerm& f, double t) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(grid.interior_size()));
  if (!f) return out;
  for (std::size_t k = 0; k < grid.interior_size(); ++k) {
    const double v = f(t, grid.nodes[grid.interior_nodes[k]]);
    require(std::isfinite(v), "source term f is not finite");
    out[static_cast<Eigen::Index>(k)] = v;
  }
  return out;
}

// M = I - theta dt L and a conjugate-gradient solver on it.
class ThetaStepper {
 public:
  ThetaStepper(const DiscreteOperator& op, double dt, double theta, double tol, int max_iterations)
      : op_(op), dt_(dt), theta_(theta), tol_(tol), max_iterations_(max_iterations) {}

  void assemble(double t_new, std::optional<double> t_explicit) {
    InteriorMatrix l = assemble_interior(op_, t_new);
    sparse_ = l.sparse;
    const double c = theta_ * dt_;
    if (sparse_) {
      Sparse id(l.sp.rows(), l.sp.cols());
      id.setIdentity();
      sp_ = id - c * l.sp;
      sp_cg_.setTolerance(tol_);
      sp_cg_.setMaxIterations(iteration_cap());
      sp_cg_.compute(sp_);
    } else {
      dense_ = -c * l.dense;
      dense_.diagonal().array() += 1.0;
      dense_cg_.setTolerance(tol_);
      dense_cg_.setMaxIterations(iteration_cap());
      dense_cg_.compute(dense_);
    }
    if (t_explicit) {
      explicit_ = *t_explicit == t_new ? std::move(l) : assemble_interior(op_, *t_explicit);
    }
  }

  Vec explicit_apply(const Vec& u) const { return explicit_ * u; }

  // Solves M x = rhs from the guess; returns x and records iterations and residual.
  Vec solve(const Vec& rhs, const Vec& guess, std::size_t step) {
    Vec x;
    Eigen::ComputationInfo info;
    if (sparse_) {
      x = sp_cg_.solveWithGuess(rhs, guess);
      info = sp_cg_.info();
      iterations_ = static_cast<std::size_t>(sp_cg_.iterations());
    } else {
      x = dense_cg_.solveWithGuess(rhs, guess);
      info = dense_cg_.info();
      iterations_ = static_cast<std::size_t>(dense_cg_.iterations());
    }
    const Vec r = (sparse_ ? Vec(sp_ * x) : Vec(dense_ * x)) - rhs;
    residual_ = r.norm();
    const double scale = rhs.norm();
    relative_ = scale > 0.0 ? residual_ / scale : residual_;
    if (info != Eigen::Success || !std::isfinite(residual_))
      fail(ErrorCode::NumericalFailure, "conjugate gradient did not converge at step " + std::to_string(step) +
                                            ": residual norm " + std::to_string(residual_) + " (relative " +
                                            std::to_string(relative_) + ") after " + std::to_string(iterations_) +
                                            " iterations");
    return x;
  }

  bool sparse() const { return sparse_; }
  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }
  double relative_residual() const { return relative_; }

 private:
  int iteration_cap() const {
    return max_iterations_ > 0 ? max_iterations_ : static_cast<int>(10 * op_.grid().interior_size() + 10);
  }

  const DiscreteOperator& op_;
  double dt_;
  double theta_;
  double tol_;
  int max_iterations_;
  bool sparse_ = false;
  Dense dense_;
  Sparse sp_;
  Eigen::ConjugateGradient<Dense, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> dense_cg_;
  Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> sp_cg_;
  InteriorMatrix explicit_;
  std::size_t iterations_ = 0;
  double residual_ = 0.0;
  double relative_ = 0.0;
};

std::size_t step_count(double t0, double t1, double dt) {
  const double steps = (t1 - t0) / dt;
  const double rounded = std::round(steps);
  require(rounded >= 1.0 && std::abs(steps - rounded) <= 1e-9 * std::max(1.0, steps),
          "(t1 - t0) / dt must be a positive integer, got " + std::to_string(steps));
  return static_cast<std::size_t>(rounded);
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void IvpConfig::validate() const {
  require(op != nullptr, "IVP needs an operator");
  require(std::isfinite(t0) && std::isfinite(t1) && t1 > t0, "time interval must satisfy t0 < t1");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(theta >= 0.5 && theta <= 1.0, "theta must lie in [1/2, 1]");
  require(tolerance > 0.0 && tolerance < 1.0, "linear-solve tolerance must lie in (0, 1)");
  require(static_cast<bool>(g.fn) || g.constant.has_value(), "exterior data is missing");
  const std::size_t m = op->grid().interior_size();
  require(static_cast<bool>(u0) || u0_values.size() == m,
          "initial data needs a function or exactly one value per unknown");
  step_count(t0, t1, dt);
}

double SpaceTimeFunction::at(std::size_t level, std::size_t node) const {
  const int k = grid().unknown_index[node];
  return k >= 0 ? interior[level][static_cast<std::size_t>(k)] : exterior(times[level], grid().nodes[node]);
}

std::vector<double> SpaceTimeFunction::snapshot(std::size_t level) const {
  require(level < levels(), "time level out of range");
  std::vector<double> out(grid().size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = at(level, j);
  return out;
}

std::size_t SpaceTimeFunction::level_of(double t) const {
  require(!times.empty(), "empty space-time function");
  const double step = times.size() > 1 ? times[1] - times[0] : 1.0;
  const double pos = (t - times.front()) / step;
  const double k = std::round(pos);
  require(k >= 0.0 && k < static_cast<double>(times.size()) && std::abs(times[static_cast<std::size_t>(k)] - t) <= 1e-9 * step,
          "time " + std::to_string(t) + " is not a level of the time grid");
  return static_cast<std::size_t>(k);
}

SpaceTimeFunction SpaceTimeFunction::scaled(double lambda) const {
  SpaceTimeFunction out = *this;
  for (auto& level : out.interior)
    for (double& v : level) v *= lambda;
  if (exterior.constant) {
    out.exterior = ExteriorData::constant_value(lambda * *exterior.constant);
  } else {
    auto fn = exterior.fn;
    out.exterior = ExteriorData::function([fn, lambda](double t, const Point& x) { return lambda * fn(t, x); },
                                          exterior.time_independent);
  }
  for (double& r : out.step_residuals) r *= std::abs(lambda);
  return out;
}

SpaceTimeFunction SpaceTimeFunction::constant(std::shared_ptr<const DiscreteOperator> op, std::vector<double> times,
                                              double c) {
  require(op != nullptr && !times.empty(), "constant function needs an operator and times");
  SpaceTimeFunction u;
  u.interior.assign(times.size(), std::vector<double>(op->grid().interior_size(), c));
  u.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  u.times = std::move(times);
  u.op = std::move(op);
  u.exterior = ExteriorData::constant_value(c);
  return u;
}

SpaceTimeFunction solve(const IvpConfig& cfg, SolveStats* stats) {
  cfg.validate();
  const DiscreteOperator& op = *cfg.op;
  const Grid& grid = op.grid();
  const std::size_t m = grid.interior_size();
  const std::size_t steps = step_count(cfg.t0, cfg.t1, cfg.dt);
  const bool coeff_static = op.coefficients().trivial() || !op.coefficients().time_dependent;
  const bool boundary_static = coeff_static && (cfg.g.time_independent || cfg.g.constant);
  const bool needs_explicit = cfg.theta < 1.0;

  SpaceTimeFunction u;
  u.op = cfg.op;
  u.exterior = cfg.g;
  u.dt = cfg.dt;
  u.theta = cfg.theta;
  u.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) u.times[k] = cfg.t0 + static_cast<double>(k) * cfg.dt;
  u.times.back() = cfg.t1;
  u.interior.reserve(steps + 1);
  u.step_residuals.reserve(steps);

  Vec cur(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const double v = cfg.u0 ? cfg.u0(grid.nodes[grid.interior_nodes[k]]) : cfg.u0_values[k];
    require(std::isfinite(v), "initial data is not finite");
    cur[static_cast<Eigen::Index>(k)] = v;
  }
  u.interior.push_back(to_std(cur));

  ThetaStepper stepper(op, cfg.dt, cfg.theta, cfg.tolerance, cfg.max_iterations);
  if (coeff_static) stepper.assemble(u.times[1], needs_explicit ? std::optional<double>(u.times[1]) : std::nullopt);
  Vec b_now = boundary_vector(op, cfg.g, u.times[0]);
  SolveStats local;
  local.sparse = stepper.sparse();

  for (std::size_t k = 0; k < steps; ++k) {
    const double tk = u.times[k];
    const double tn = u.times[k + 1];
    if (!coeff_static) stepper.assemble(tn, needs_explicit ? std::optional<double>(tk) : std::nullopt);
    const Vec b_next = boundary_static ? b_now : boundary_vector(op, cfg.g, tn);
    Vec rhs = cur + cfg.theta * cfg.dt * b_next + cfg.dt * source_vector(grid, cfg.f, tk + cfg.theta * cfg.dt);
    if (needs_explicit) rhs += (1.0 - cfg.theta) * cfg.dt * (stepper.explicit_apply(cur) + b_now);
    cur = stepper.solve(rhs, cur, k);
    u.interior.push_back(to_std(cur));
    u.step_residuals.push_back(stepper.residual());
    local.total_iterations += stepper.iterations();
    local.max_iterations = std::max(local.max_iterations, stepper.iterations());
    local.max_relative_residual = std::max(local.max_relative_residual, stepper.relative_residual());
    b_now = b_next;
  }
  local.steps = steps;
  local.sparse = stepper.sparse();
  if (stats) *stats = local;
  return u;
}

StationaryResult solve_stationary(std::shared_ptr<const DiscreteOperator> op, const ExteriorData& g, double dt,
                                  double change_tol, std::size_t max_steps, double tolerance) {
  require(op != nullptr, "stationary solve needs an operator");
  require(dt > 0.0 && change_tol > 0.0 && max_steps >= 1, "stationary solve needs dt > 0, a tolerance and steps");
  require(op->coefficients().trivial() || !op->coefficients().time_dependent,
          "stationary solve needs time-independent coefficients");
  require(g.time_independent || g.constant, "stationary solve needs time-independent exterior data");
  ThetaStepper stepper(*op, dt, 1.0, tolerance, 0);
  stepper.assemble(0.0, std::nullopt);
  const Vec b = boundary_vector(*op, g, 0.0);
  Vec cur = Vec::Zero(static_cast<Eigen::Index>(op->grid().interior_size()));
  StationaryResult out;
  for (std::size_t k = 0; k < max_steps; ++k) {
    const Vec next = stepper.solve(cur + dt * b, cur, k);
    const double scale = next.cwiseAbs().maxCoeff();
    out.relative_change = scale > 0.0 ? (next - cur).cwiseAbs().maxCoeff() / scale : 0.0;
    cur = next;
    out.steps = k + 1;
    if (out.relative_change <= change_tol) {
      out.converged = true;
      break;
    }
  }
  out.interior = to_std(cur);
  return out;
}

TestFunction TestFunction::bump(const Ball& support, int dim, double a, double w, double p) {
  require(support.radius > 0.0, "test function support radius must be positive");
  require(std::abs(a) < 1.0, "time modulation amplitude must be below 1");
  TestFunction phi;
  phi.support = support;
  phi.phi = [support, dim, a, w, p](double t, const Point& x) {
    const double q = 1.0 - std::pow(distance(x, support.center, dim) / support.radius, 2);
    if (q <= 0.0) return 0.0;
    return q * q * q * (1.0 + a * std::sin(w * t + p));
  };
  return phi;
}

WeakFormResidual weak_residual(const SpaceTimeFunction& u, const DiscreteOperator& op, const TestFunction& phi,
                               double t1, double t2, const SourceTerm& f, bool nonnegative_phi) {
  const Grid& grid = op.grid();
  require(u.op != nullptr && u.grid().size() == grid.size() && u.grid().h == grid.h &&
              u.grid().interior_size() == grid.interior_size(),
          "weak_residual: u and the operator live on different grids");
  require(static_cast<bool>(phi.phi), "weak_residual: empty test function");
  require(t2 > t1, "weak_residual: need t1 < t2");
  const std::size_t k1 = u.level_of(t1);
  const std::size_t k2 = u.level_of(t2);
  require(distance(phi.support.center, grid.omega_center, grid.dim) + phi.support.radius < grid.omega_radius,
          "test function support must lie compactly inside the domain");

  std::vector<std::size_t> support;  // unknowns in the closed support ball
  for (std::size_t k = 0; k < grid.interior_size(); ++k) {
    const Point& x = grid.nodes[grid.interior_nodes[k]];
    if (distance(x, phi.support.center, grid.dim) <= phi.support.radius) {
      support.push_back(k);
    } else {
      require(phi.phi(u.times[k1], x) == 0.0 && phi.phi(u.times[k2], x) == 0.0,
              "test function does not vanish outside its support ball");
    }
  }
  const double hd = std::pow(grid.h, grid.dim);
  const std::size_t n = support.size();
  const std::size_t levels = k2 - k1 + 1;

  // Per level: phi, u, Lu and f on the support.
  std::vector<std::vector<double>> ph(levels, std::vector<double>(n)), uu(levels, std::vector<double>(n)),
      lu(levels, std::vector<double>(n)), ff(levels, std::vector<double>(n, 0.0)), fth(levels, std::vector<double>(n, 0.0));
  double phi_max = 0.0;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t k = k1 + l;
    const double t = u.times[k];
    const std::vector<double> snap = u.snapshot(k);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t q = support[s];
      const Point& x = grid.nodes[grid.interior_nodes[q]];
      ph[l][s] = phi.phi(t, x);
      require(std::isfinite(ph[l][s]), "test function is not finite");
      if (nonnegative_phi) require(ph[l][s] >= 0.0, "test function must be nonnegative");
      phi_max = std::max(phi_max, std::abs(ph[l][s]));
      uu[l][s] = u.interior[k][q];
      lu[l][s] = apply_row(op, snap, u.exterior, t, q);
      if (f) {
        ff[l][s] = f(t, x);
        if (l + 1 < levels) fth[l][s] = f(t + u.theta * (u.times[k + 1] - t), x);
      }
    }
  }

  double magnitude = 0.0;
  auto pair = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    magnitude += std::abs(s) * hd;
    return s * hd;
  };
  const double theta = u.theta;
  const double ends = pair(ph[levels - 1], uu[levels - 1]) - pair(ph[0], uu[0]);
  double trap = ends;
  double scheme = ends;
  double solver = 0.0;
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    const double dt = u.times[k1 + l + 1] - u.times[k1 + l];
    std::vector<double> dphi(n), umid(n);
    for (std::size_t i = 0; i < n; ++i) {
      dphi[i] = ph[l + 1][i] - ph[l][i];
      umid[i] = 0.5 * (uu[l][i] + uu[l + 1][i]);
    }
    // E_t(u, phi) = -<Lu, phi>.
    const double e_kk = -pair(lu[l], ph[l]);
    const double e_nn = -pair(lu[l + 1], ph[l + 1]);
    const double e_kn = -pair(lu[l], ph[l + 1]);
    trap += -pair(umid, dphi) + 0.5 * dt * (e_kk + e_nn) - 0.5 * dt * (pair(ff[l], ph[l]) + pair(ff[l + 1], ph[l + 1]));
    scheme += -pair(uu[l], dphi) + dt * (theta * e_nn + (1.0 - theta) * e_kn) - dt * pair(fth[l], ph[l + 1]);
    if (k1 + l < u.step_residuals.size()) {
      double norm2 = 0.0;
      for (double v : ph[l + 1]) norm2 += v * v;
      solver += u.step_residuals[k1 + l] * std::sqrt(norm2) * hd;
    }
  }

  WeakFormResidual out;
  out.t1 = u.times[k1];
  out.t2 = u.times[k2];
  out.lhs_minus_rhs = trap;
  out.scheme_residual = scheme;
  out.solver_term = solver;
  out.epsilon_scheme = std::abs(trap - scheme) + solver + 64.0 * std::numeric_limits<double>::epsilon() * magnitude;
  const double ball = grid.dim == 1 ? 2.0 * phi.support.radius : kPi * phi.support.radius * phi.support.radius;
  out.phi_scale = phi_max * ball * (out.t2 - out.t1);
  out.supersolution = trap >= -out.epsilon_scheme;
  return out;
}

}  // namespace nllab
