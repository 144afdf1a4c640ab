#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "nllab/error.hpp"
#include "nllab/solver.hpp"

using namespace nllab;

namespace {

std::shared_ptr<const DiscreteOperator> make_op(const MeasureSpec& spec, double box, double h, double omega,
                                                EquationCoefficients coeff = {}) {
  return std::make_shared<const DiscreteOperator>(spec, make_grid(spec.dim, box, h, omega), std::move(coeff));
}

double interior_max(const SpaceTimeFunction& u, std::size_t level) {
  double m = 0.0;
  for (double v : u.interior[level]) m = std::max(m, std::abs(v));
  return m;
}

// Hat of unit discrete mass at the origin.
std::vector<double> hat(const Grid& g) {
  std::vector<double> u(g.interior_size(), 0.0);
  const std::size_t centre = g.size() / 2;
  u[static_cast<std::size_t>(g.unknown_index[centre])] = 1.0 / std::pow(g.h, g.dim);
  return u;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("constant data stays constant") {
    EquationCoefficients a{[](double t, const Point& x, const Point& y) { return 1.5 + 0.3 * std::sin(t) * std::cos(x[0] + y[0]); },
                           true};
    for (double theta : {1.0, 0.5}) {
      for (const auto& op : {make_op(MeasureSpec::alpha_stable(1, 1.3), 2.0, 1.0 / 16, 1.0),
                             make_op(MeasureSpec::axes(2, 0.8), 1.0, 1.0 / 8, 1.0),
                             make_op(MeasureSpec::alpha_stable(1, 0.7), 2.0, 1.0 / 16, 1.0, a)}) {
        IvpConfig cfg;
        cfg.op = op;
        cfg.t1 = 0.5;
        cfg.dt = 1.0 / 16;
        cfg.theta = theta;
        cfg.u0 = [](const Point&) { return 3.0; };
        cfg.g = ExteriorData::constant_value(3.0);
        const auto u = solve(cfg);
        REQUIRE(u.levels() == 9);
        for (const auto& level : u.interior)
          for (double v : level) CHECK(std::abs(v - 3.0) <= 1e-8);
      }
    }
  }

  TEST_CASE("implicit steps preserve nonnegativity") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5), 1.0, 1.0 / 16, 1.0);
    REQUIRE(op->grid().n == 33);
    IvpConfig cfg;
    cfg.op = op;
    cfg.dt = 1.0 / 32;
    cfg.tolerance = 1e-12;
    cfg.u0 = [](const Point& x) { return std::abs(x[0] - 0.3) < 0.1 ? 1.0 : 0.0; };
    cfg.g = ExteriorData::function([](double t, const Point& x) { return std::max(0.0, std::sin(4 * x[0] + t)); }, false);
    cfg.f = [](double t, const Point& x) { return x[0] > 0.0 ? t : 0.0; };
    const auto u = solve(cfg);
    for (const auto& level : u.interior)
      for (double v : level) CHECK(v >= -1e-12);
  }

  TEST_CASE("hat data follows the Cauchy kernel") {
    const auto spec = MeasureSpec::alpha_stable(1, 1.0, fractional_laplacian_constant(1, 1.0));
    const auto op = make_op(spec, 8.0, 1.0 / 32, 8.0);
    IvpConfig cfg;
    cfg.op = op;
    cfg.t1 = 0.5;
    cfg.dt = 1.0 / 256;
    cfg.u0_values = hat(op->grid());
    const auto u = solve(cfg);
    const double centre = u.interior.back()[static_cast<std::size_t>(op->grid().unknown_index[op->grid().size() / 2])];
    CHECK(std::abs(centre - 2.0 / kPi) <= 0.05 * 2.0 / kPi);
  }

  TEST_CASE("energy is nonincreasing without data") {
    const auto op = make_op(MeasureSpec::alpha_stable(2, 1.2), 1.0, 0.125, 1.0);
    IvpConfig cfg;
    cfg.op = op;
    cfg.dt = 0.05;
    cfg.u0 = [](const Point& x) { return std::cos(3 * x[0]) + x[1]; };
    const auto u = solve(cfg);
    double prev = 1e300;
    for (const auto& level : u.interior) {
      double e = 0.0;
      for (double v : level) e += v * v;
      CHECK(e <= prev * (1.0 + 1e-12));
      prev = e;
    }
  }

  TEST_CASE("theta = 1/2 is second order in time") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.2), 2.0, 1.0 / 16, 2.0);
    auto run = [&](double dt) {
      IvpConfig cfg;
      cfg.op = op;
      cfg.t1 = 0.5;
      cfg.dt = dt;
      cfg.theta = 0.5;
      cfg.tolerance = 1e-13;
      cfg.u0 = [](const Point& x) { return std::exp(-4 * x[0] * x[0]) * (1 - x[0] * x[0] / 4) * (1 - x[0] * x[0] / 4); };
      cfg.f = [](double t, const Point& x) { return std::cos(t) * std::exp(-x[0] * x[0]); };
      return solve(cfg).interior.back();
    };
    const auto ref = run(1.0 / 1024);
    auto err = [&](const std::vector<double>& v) {
      double e = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) e = std::max(e, std::abs(v[k] - ref[k]));
      return e;
    };
    const double e1 = err(run(1.0 / 16));
    const double e2 = err(run(1.0 / 32));
    CHECK(e1 / e2 >= 3.5);
    CHECK(e1 / e2 <= 4.5);
  }

  TEST_CASE("weak residual of a constant solution vanishes") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5), 2.0, 1.0 / 16, 1.5);
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(k * 0.05);
    const auto u = SpaceTimeFunction::constant(op, times, 2.0);
    const auto phi = TestFunction::bump(Ball{{0.2, 0.0}, 0.7}, 1, 0.4, 3.0, 0.1);
    const auto r = weak_residual(u, *op, phi, 0.1, 0.9);
    CHECK(std::abs(r.lhs_minus_rhs) <= 1e-10);
    CHECK(std::abs(r.scheme_residual) <= 1e-10);
    CHECK(r.supersolution);
  }

  TEST_CASE("solutions satisfy the weak form with equality") {
    for (const auto& op : {make_op(MeasureSpec::alpha_stable(1, 1.5), 2.0, 1.0 / 16, 1.5),
                           make_op(MeasureSpec::axes(2, 1.0), 1.0, 1.0 / 8, 1.0)}) {
      for (double theta : {1.0, 0.5}) {
        std::vector<double> eps;
        for (double dt : {1.0 / 32, 1.0 / 64}) {
          IvpConfig cfg;
          cfg.op = op;
          cfg.dt = dt;
          cfg.theta = theta;
          cfg.u0 = [](const Point& x) { return 1.0 + x[0]; };
          cfg.g = ExteriorData::function([](double, const Point& x) { return 1.0 + x[0] * x[0]; }, true);
          cfg.f = [](double, const Point&) { return 1.0; };
          const auto u = solve(cfg);
          const auto phi = TestFunction::bump(Ball{{0.1, 0.0}, 0.6}, op->grid().dim, 0.3, 2.0, 0.0);
          const auto r = weak_residual(u, *op, phi, 0.25, 1.0, cfg.f);
          // The theta-scheme identity holds up to the linear-solver residuals.
          CHECK(std::abs(r.scheme_residual) <= r.solver_term + 1e-12);
          CHECK(std::abs(r.lhs_minus_rhs) <= r.epsilon_scheme);
          CHECK(r.supersolution);
          eps.push_back(r.epsilon_scheme);
        }
        // The trapezoid form differs from the scheme's form by O(dt).
        CHECK(eps[1] <= 0.6 * eps[0]);
      }
    }
  }

  TEST_CASE("adding t times an interior bump gives a strict supersolution") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.2), 2.0, 1.0 / 16, 1.5);
    IvpConfig cfg;
    cfg.op = op;
    cfg.dt = 1.0 / 32;
    cfg.u0 = [](const Point& x) { return std::exp(-x[0] * x[0]); };
    cfg.f = [](double, const Point&) { return 1.0; };
    auto u = solve(cfg);
    const Grid& g = op->grid();
    for (std::size_t l = 0; l < u.levels(); ++l)
      for (std::size_t k = 0; k < g.interior_size(); ++k) {
        const double x = g.nodes[g.interior_nodes[k]][0];
        if (std::abs(x) < 0.5) u.interior[l][k] += u.times[l] * std::pow(1 - 4 * x * x, 2);
      }
    const auto phi = TestFunction::bump(Ball{{0.0, 0.0}, 0.8}, 1);
    const auto r = weak_residual(u, *op, phi, 0.0, 1.0, cfg.f);
    CHECK(r.lhs_minus_rhs > r.epsilon_scheme);
    CHECK(r.lhs_minus_rhs > 0.0);
  }

  TEST_CASE("residual energy term matches the bilinear form") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 0.9), 1.0, 1.0 / 8, 1.0);
    IvpConfig cfg;
    cfg.op = op;
    cfg.dt = 0.25;
    cfg.u0 = [](const Point& x) { return std::sin(5 * x[0]); };
    cfg.g = ExteriorData::function([](double, const Point& x) { return 1.0 / (1.0 + x[0] * x[0]); }, true);
    const auto u = solve(cfg);
    const auto phi = TestFunction::bump(Ball{{0.0, 0.0}, 0.5}, 1);
    const auto snap = u.snapshot(2);
    std::vector<double> ph(op->grid().size());
    for (std::size_t k = 0; k < ph.size(); ++k) ph[k] = phi.phi(0.5, op->grid().nodes[k]);
    const double e = bilinear_form(*op, snap, ph, 0.5, u.exterior, ExteriorData::zero());
    const auto lu = apply(*op, snap, u.exterior, 0.5);
    double pairing = 0.0;
    for (std::size_t k = 0; k < lu.size(); ++k) pairing += lu[k] * ph[op->grid().interior_nodes[k]] * op->grid().h;
    CHECK(std::abs(e + pairing) <= 1e-10);
  }

  TEST_CASE("weak residual rejects inadmissible test functions") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.0), 2.0, 1.0 / 8, 1.0);
    std::vector<double> times{0.0, 0.5, 1.0};
    const auto u = SpaceTimeFunction::constant(op, times, 1.0);
    CHECK_THROWS_AS(weak_residual(u, *op, TestFunction::bump(Ball{{0.5, 0.0}, 0.5}, 1), 0.0, 1.0), Error);
    TestFunction leaky = TestFunction::bump(Ball{{0.0, 0.0}, 0.3}, 1);
    leaky.phi = [](double, const Point&) { return 1.0; };
    CHECK_THROWS_AS(weak_residual(u, *op, leaky, 0.0, 1.0), Error);
    TestFunction negative = TestFunction::bump(Ball{{0.0, 0.0}, 0.3}, 1);
    negative.phi = [](double, const Point& x) { return std::abs(x[0]) <= 0.3 ? -1.0 : 0.0; };
    CHECK_THROWS_AS(weak_residual(u, *op, negative, 0.0, 1.0), Error);
    CHECK_NOTHROW(weak_residual(u, *op, negative, 0.0, 1.0, {}, false));
    CHECK_THROWS_AS(weak_residual(u, *op, TestFunction::bump(Ball{{0.0, 0.0}, 0.3}, 1), 0.0, 0.7), Error);
  }

  TEST_CASE("configuration errors and solver failures are reported") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.0), 2.0, 1.0 / 16, 2.0);
    IvpConfig cfg;
    cfg.op = op;
    cfg.u0 = [](const Point& x) { return std::cos(x[0]); };
    cfg.theta = 0.3;
    CHECK_THROWS_AS(solve(cfg), Error);
    cfg.theta = 1.0;
    cfg.dt = 0.3;
    CHECK_THROWS_AS(solve(cfg), Error);
    cfg.dt = 0.5;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-14;
    try {
      solve(cfg);
      FAIL("expected a solver failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NumericalFailure);
      CHECK(std::string(e.what()).find("residual norm") != std::string::npos);
    }
  }

  TEST_CASE("stationary solve reaches the constant state") {
    const auto op = make_op(MeasureSpec::axes(2, 1.0), 2.0, 0.25, 1.5);
    const auto res = solve_stationary(op, ExteriorData::constant_value(0.7), 10.0, 1e-12, 200);
    CHECK(res.converged);
    for (double v : res.interior) CHECK(v == doctest::Approx(0.7).epsilon(1e-9));
  }

  TEST_CASE("test supersolutions are certified, nonnegative and deterministic") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5), 4.0, 1.0 / 16, 2.0);
    SupersolutionOptions opt;
    opt.dt = 1.0 / 32;
    const auto a = make_test_supersolutions(op, 42, 8, opt);
    const auto b = make_test_supersolutions(op, 42, 8, opt);
    REQUIRE(a.samples.size() == 8);
    REQUIRE(b.samples.size() == 8);
    CHECK(a.certificates.size() == 24);
    for (std::size_t s = 0; s < 8; ++s) {
      CHECK(a.samples[s].interior == b.samples[s].interior);
      for (const auto& level : a.samples[s].interior)
        for (double v : level) CHECK(v >= -1e-10);
    }
    for (const auto& c : a.certificates) CHECK(c.supersolution);
  }

  TEST_CASE("an interior bump with zero exterior data decays at the centre") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.0), 4.0, 1.0 / 16, 2.0);
    IvpConfig cfg;
    cfg.op = op;
    cfg.t1 = 1.0;
    cfg.dt = 1.0 / 16;
    cfg.u0 = [](const Point& x) { return std::max(0.0, 1 - x[0] * x[0]); };
    const auto u = solve(cfg);
    const auto centre = static_cast<std::size_t>(op->grid().unknown_index[op->grid().size() / 2]);
    for (std::size_t l = 2; l < u.levels(); ++l) CHECK(u.interior[l][centre] < u.interior[l - 1][centre]);
    CHECK(interior_max(u, u.levels() - 1) < interior_max(u, 0));
  }
}
