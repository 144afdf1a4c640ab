#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nllab/error.hpp"
#include "nllab/rng.hpp"
#include "nllab/solver.hpp"

namespace nllab {

namespace {

Point random_direction(CounterRng& rng, int dim) {
  if (dim == 1) return {rng.sign(), 0.0};
  const double a = rng.uniform(0.0, 2.0 * kPi);
  return {std::cos(a), std::sin(a)};
}

Point random_point_in_ball(CounterRng& rng, int dim, double radius) {
  const Point u = random_direction(rng, dim);
  const double r = radius * (dim == 1 ? rng.uniform() : std::sqrt(rng.uniform()));
  return {r * u[0], r * u[1]};
}

// Nonnegative mixture of smooth bumps, trapezoidal plateaus and a constant floor.
std::function<double(const Point&)> random_initial(CounterRng& rng, int dim, double omega) {
  struct Piece {
    Point c;
    double r;
    double amp;
    bool plateau;
  };
  std::vector<Piece> pieces(1 + rng.below(3));
  for (auto& p : pieces) {
    p.c = random_point_in_ball(rng, dim, 0.8 * omega);
    p.r = rng.uniform(0.15, 0.6) * omega;
    p.amp = rng.uniform(0.0, 2.0);
    p.plateau = rng.uniform() < 0.4;
  }
  const double floor = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.5) : 0.0;
  return [pieces, floor, dim](const Point& x) {
    double v = floor;
    for (const auto& p : pieces) {
      const double d = distance(x, p.c, dim);
      if (p.plateau) {
        v += p.amp * std::clamp((p.r - d) / (0.25 * p.r), 0.0, 1.0);
      } else {
        const double q = 1.0 - (d / p.r) * (d / p.r);
        if (q > 0.0) v += p.amp * q * q;
      }
    }
    return v;
  };
}

// Time-independent nonnegative exterior data: zero, a constant, Gaussian masses outside the
// domain, or masses concentrated along one coordinate axis.
ExteriorData random_exterior(CounterRng& rng, int dim, double omega, double box) {
  const double kind = rng.uniform();
  if (kind < 0.2) return ExteriorData::zero();
  if (kind < 0.3) return ExteriorData::constant_value(rng.uniform(0.0, 1.0));
  struct Mass {
    Point c;
    double along;
    double across;
    double amp;
    int axis;  // -1: isotropic
  };
  std::vector<Mass> masses(1 + rng.below(2));
  for (auto& m : masses) {
    const double dist = rng.uniform(omega, std::max(omega, std::min(box, 2.0 * omega)));
    m.amp = rng.uniform(0.0, 3.0);
    m.along = rng.uniform(0.2, 1.0) * omega;
    if (dim == 2 && rng.uniform() < 0.5) {
      m.axis = static_cast<int>(rng.below(2));
      m.c = {0.0, 0.0};
      m.c[static_cast<std::size_t>(m.axis)] = rng.sign() * dist;
      m.across = 0.05 * omega;
    } else {
      const Point u = random_direction(rng, dim);
      m.c = {dist * u[0], dist * u[1]};
      m.axis = -1;
      m.across = m.along;
    }
  }
  return ExteriorData::function(
      [masses, dim](double, const Point& x) {
        double v = 0.0;
        for (const auto& m : masses) {
          if (m.axis < 0) {
            const double d = distance(x, m.c, dim);
            v += m.amp * std::exp(-(d * d) / (m.along * m.along));
          } else {
            const auto a = static_cast<std::size_t>(m.axis);
            const double p = x[a] - m.c[a];
            const double q = x[1 - a] - m.c[1 - a];
            v += m.amp * std::exp(-(p * p) / (m.along * m.along) - (q * q) / (m.across * m.across));
          }
        }
        return v;
      },
      true);
}

}  // namespace

SupersolutionBatch make_test_supersolutions(std::shared_ptr<const DiscreteOperator> op, std::uint64_t seed, int count,
                                            const SupersolutionOptions& options) {
  require(op != nullptr, "supersolutions need an operator");
  require(count >= 0, "sample count must be nonnegative");
  require(options.certificates >= 1, "at least one certificate per sample is required");
  const Grid& grid = op->grid();
  const double omega = grid.omega_radius;
  const int attempts = options.max_attempts > 0 ? options.max_attempts : 3 * count;
  SupersolutionBatch batch;

  for (int attempt = 0; attempt < attempts && static_cast<int>(batch.samples.size()) < count; ++attempt) {
    CounterRng rng(seed, static_cast<std::uint64_t>(attempt));
    const std::string tag = "candidate " + std::to_string(attempt) + ": ";
    IvpConfig cfg;
    cfg.op = op;
    cfg.t0 = options.t0;
    cfg.t1 = options.t1;
    cfg.dt = options.dt;
    cfg.theta = options.theta;
    cfg.tolerance = options.tolerance;
    cfg.u0 = random_initial(rng, grid.dim, omega);
    cfg.g = random_exterior(rng, grid.dim, omega, grid.box_radius);
    SpaceTimeFunction u;
    try {
      u = solve(cfg);
    } catch (const Error& e) {
      batch.discarded.push_back(tag + "solve failed: " + e.what());
      continue;
    }

    double lo = 0.0, hi = 0.0;
    for (const auto& level : u.interior)
      for (double v : level) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (lo < -1e-8 * std::max(1.0, hi)) {
      batch.discarded.push_back(tag + "negative value " + std::to_string(lo));
      continue;
    }

    std::vector<WeakFormResidual> certs;
    bool ok = true;
    const std::size_t last = u.levels() - 1;
    for (int c = 0; c < options.certificates && ok; ++c) {
      Point centre = random_point_in_ball(rng, grid.dim, 0.5 * omega);
      centre = {centre[0] + grid.omega_center[0], centre[1] + grid.omega_center[1]};
      const double radius = rng.uniform(0.2, 0.45) * omega;
      const TestFunction phi = TestFunction::bump(Ball{centre, radius}, grid.dim, rng.uniform(0.0, 0.5),
                                                  rng.uniform(0.0, 4.0), rng.uniform(0.0, 2.0 * kPi));
      const std::size_t a = rng.below(last / 2 + 1);
      const std::size_t b = a + 1 + rng.below(last - a);
      const WeakFormResidual r = weak_residual(u, *op, phi, u.times[a], u.times[b]);
      certs.push_back(r);
      if (!r.supersolution) {
        ok = false;
        batch.discarded.push_back(tag + "certificate " + std::to_string(c) + " failed: residual " +
                                  std::to_string(r.lhs_minus_rhs) + " below -" + std::to_string(r.epsilon_scheme));
      }
    }
    if (!ok) continue;
    batch.samples.push_back(std::move(u));
    batch.certificates.insert(batch.certificates.end(), certs.begin(), certs.end());
  }
  if (static_cast<int>(batch.samples.size()) < count)
    fail(ErrorCode::NumericalFailure, "only " + std::to_string(batch.samples.size()) + " of " + std::to_string(count) +
                                          " supersolution candidates were certified");
  return batch;
}

}  // namespace nllab
