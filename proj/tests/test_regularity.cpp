#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "nllab/error.hpp"
#include "nllab/regularity.hpp"
#include "nllab/rng.hpp"

using namespace nllab;

namespace {

std::shared_ptr<const DiscreteOperator> make_op(const MeasureSpec& spec, double box, double h, double omega) {
  return std::make_shared<const DiscreteOperator>(spec, make_grid(spec.dim, box, h, omega));
}

std::vector<double> uniform_times(double t0, double t1, double dt) {
  const auto n = static_cast<std::size_t>(std::llround((t1 - t0) / dt));
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = t0 + static_cast<double>(k) * dt;
  return t;
}

// A space-time function given by a formula at every node, including the exterior data.
SpaceTimeFunction from_formula(std::shared_ptr<const DiscreteOperator> op, std::vector<double> times,
                               const std::function<double(double, const Point&)>& fn) {
  auto u = SpaceTimeFunction::constant(op, std::move(times), 0.0);
  const Grid& g = op->grid();
  for (std::size_t k = 0; k < u.levels(); ++k)
    for (std::size_t j = 0; j < g.interior_size(); ++j) u.interior[k][j] = fn(u.times[k], g.nodes[g.interior_nodes[j]]);
  u.exterior = ExteriorData::function(fn, false);
  return u;
}

// A few certified supersolutions on a small one-dimensional grid, shared by several cases.
const SupersolutionBatch& small_batch() {
  static const SupersolutionBatch batch = [] {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5, 0.5), 4.0, 1.0 / 16, 2.0);
    SupersolutionOptions opt;
    opt.dt = 1.0 / 64;
    return make_test_supersolutions(op, 11, 4, opt);
  }();
  return batch;
}

}  // namespace

TEST_SUITE("regularity") {
  TEST_CASE("constant functions give the volume of the early cylinder") {
    for (double alpha : {1.0, 1.5, 0.6}) {
      const auto op = make_op(MeasureSpec::alpha_stable(1, alpha), 4.0, 1.0 / 32, 2.0);
      const auto u = SpaceTimeFunction::constant(op, uniform_times(-1.0, 1.0, 1.0 / 128), 2.5);
      const auto q = harnack_quotient(u, {}, alpha);
      CHECK_FALSE(q.degenerate);
      CHECK(q.inf_upper == 2.5);
      CHECK(q.quotient == doctest::Approx(std::pow(0.5, alpha)).epsilon(1e-12));
    }
    const auto op2 = make_op(MeasureSpec::axes(2, 1.0), 2.0, 1.0 / 8, 2.0);
    const auto u2 = SpaceTimeFunction::constant(op2, uniform_times(-1.0, 1.0, 1.0 / 16), 1.0);
    const double disc = std::numbers::pi / 4;
    CHECK(harnack_quotient(u2, {}, 1.0).quotient == doctest::Approx(0.5 * disc).epsilon(1e-10));
  }

  TEST_CASE("the Harnack quotient is homogeneous of degree zero") {
    const auto& batch = small_batch();
    REQUIRE(batch.samples.size() == 4);
    const SourceTerm f = [](double t, const Point& x) { return 0.1 * std::cos(t + x[0]); };
    for (const auto& u : batch.samples) {
      const auto base = harnack_quotient(u, f, 1.5);
      const SourceTerm f4 = [&](double t, const Point& x) { return 4.0 * f(t, x); };
      CHECK(harnack_quotient(u.scaled(4.0), f4, 1.5).quotient == base.quotient);
      const SourceTerm f37 = [&](double t, const Point& x) { return 3.7 * f(t, x); };
      CHECK(harnack_quotient(u.scaled(3.7), f37, 1.5).quotient == doctest::Approx(base.quotient).epsilon(1e-12));
      CHECK(harnack_quotient(u.scaled(0.3), {}, 1.5).quotient ==
            doctest::Approx(harnack_quotient(u, {}, 1.5).quotient).epsilon(1e-12));
    }
  }

  TEST_CASE("zero data make the quotient degenerate") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.0), 4.0, 1.0 / 16, 2.0);
    const auto u = SpaceTimeFunction::constant(op, uniform_times(-1.0, 1.0, 1.0 / 32), 0.0);
    const auto q = harnack_quotient(u, {}, 1.0);
    CHECK(q.degenerate);
    CHECK(q.quotient == 0.0);
    const auto rep = harnack_batch({u, u.scaled(2.0)}, {}, 1.0);
    CHECK(rep.degenerate_count == 2);
    CHECK(rep.max_quotient == 0.0);
  }

  TEST_CASE("refinement drift") {
    CHECK(refinement_drift(2.0, 2.1) == doctest::Approx(0.05));
    CHECK(refinement_drift(2.0, 1.9) == doctest::Approx(0.05));
    CHECK_THROWS_AS(refinement_drift(0.0, 1.0), Error);
  }

  TEST_CASE("Hölder fit of constant and Lipschitz data") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5), 2.0, 1.0 / 64, 2.0);
    Cylinder q;
    q.alpha = 1.5;
    q.t_lo = 0.25;
    q.t_hi = 1.0;
    q.ball = {{0.0, 0.0}, 0.5};
    const auto times = uniform_times(0.0, 1.0, 1.0 / 64);

    const auto c = holder_fit(SpaceTimeFunction::constant(op, times, 7.0), q, 1.5);
    CHECK(c.constant);
    CHECK(c.seminorm == 0.0);
    CHECK(c.sup_norm == 7.0);

    const auto lin = holder_fit(from_formula(op, times, [](double, const Point& x) { return x[0]; }), q, 1.5);
    CHECK_FALSE(lin.constant);
    CHECK(lin.beta == doctest::Approx(1.0).epsilon(0.05));
    CHECK(lin.seminorm == doctest::Approx(1.0).epsilon(0.1));
    CHECK(lin.window_lo == doctest::Approx(2.0 / 64));

    // lambda u + c moves only the intercept.
    const auto base = holder_fit(from_formula(op, times, [](double t, const Point& x) { return std::sin(3 * x[0]) * std::exp(-t); }), q, 1.5);
    const auto moved =
        holder_fit(from_formula(op, times, [](double t, const Point& x) { return -2.5 * std::sin(3 * x[0]) * std::exp(-t) + 4.0; }), q, 1.5);
    CHECK(moved.beta == doctest::Approx(base.beta).epsilon(1e-12));
    CHECK(moved.seminorm == doctest::Approx(2.5 * base.seminorm).epsilon(1e-12));
    CHECK(base.beta > 0.0);
  }

  TEST_CASE("Hölder fit of a solution with rough initial data") {
    const auto spec = MeasureSpec::alpha_stable(1, 1.5);
    Cylinder q;
    q.alpha = 1.5;
    q.t_lo = 0.25;
    q.t_hi = 1.0;
    q.ball = {{0.0, 0.0}, 0.5};
    std::vector<double> beta;
    for (double h : {1.0 / 32, 1.0 / 64}) {
      IvpConfig cfg;
      cfg.op = make_op(spec, 4.0, h, 2.0);
      cfg.dt = h;
      cfg.u0 = [](const Point& x) {
        const auto cell = static_cast<std::uint64_t>(std::floor(x[0] * 64 + 1e-9) + 1000);
        return (CounterRng::hash(3, 0, cell) & 1U) ? 1.0 : -1.0;
      };
      const auto fit = holder_fit(solve(cfg), q, 1.5);
      CHECK(fit.beta > 0.0);
      CHECK(fit.beta <= 1.2);
      CHECK(fit.eta > 0.0);
      beta.push_back(fit.beta);
    }
    CHECK(std::abs(beta[1] - beta[0]) <= 0.2 * beta[0]);
  }

  TEST_CASE("Hölder fit rejects an empty window") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.0), 2.0, 1.0 / 8, 2.0);
    Cylinder q;
    q.t_lo = 0.5;
    q.t_hi = 0.55;
    q.ball = {{0.0, 0.0}, 0.1};
    const auto u = from_formula(op, uniform_times(0.0, 1.0, 1.0 / 8), [](double, const Point& x) { return x[0]; });
    CHECK_THROWS_AS(holder_fit(u, q, 1.0), Error);
  }

  TEST_CASE("scaling check: identity, convergence and rejection") {
    ScalingProblem p;
    p.spec = MeasureSpec::alpha_stable(1, 1.0);
    p.h = 1.0 / 16;
    p.dt = 1.0 / 32;
    p.u0 = [](const Point& x) {
      const double s = 1.0 - 4.0 * x[0] * x[0];
      return s > 0.0 ? s * s * s : 0.0;
    };
    CHECK(scaling_check(p, {}).discrepancy == 0.0);

    ScalingParams half;
    half.r = 0.5;
    const auto coarse = scaling_check(p, half);
    CHECK(coarse.compared > 0);
    CHECK(coarse.discrepancy <= coarse.epsilon_scheme);
    CHECK(coarse.original_h == p.h);
    CHECK(coarse.original_dt == doctest::Approx(0.5 * p.dt));
    p.h /= 2;
    p.dt /= 2;
    p.reference_factor = 0;
    const auto fine = scaling_check(p, half);
    CHECK(fine.discrepancy * 1.5 <= coarse.discrepancy);

    ScalingParams bad;
    bad.r = 1.0 / std::numbers::pi;
    CHECK_THROWS_AS(scaling_check(p, bad), Error);
    ScalingParams shifted;
    shifted.r = 0.5;
    shifted.xi = {0.01, 0.0};
    CHECK_THROWS_AS(scaling_check(p, shifted), Error);
    p.spec = MeasureSpec::cusp(1.5, 0.5);
    CHECK_THROWS_AS(scaling_check(p, half), Error);
  }

  TEST_CASE("rescaled assembly matches the dilated grid") {
    CHECK(scaled_assembly_mismatch(MeasureSpec::alpha_stable(1, 1.3), 1.0 / 8, 0.5) <= 1e-10);
    CHECK(scaled_assembly_mismatch(MeasureSpec::alpha_stable(2, 0.7), 1.0 / 4, 0.5) <= 1e-10);
    CHECK(scaled_assembly_mismatch(MeasureSpec::axes(2, 1.2), 1.0 / 4, 0.25) <= 1e-10);
  }

  TEST_CASE("weighted Poincaré ratio") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5, 0.5), 2.0, 1.0 / 32, 2.0);
    const auto& g = op->grid();
    const auto c = weighted_poincare_ratio(*op, std::vector<double>(g.size(), 3.0));
    CHECK(c.lhs == 0.0);
    CHECK(c.degenerate);
    CHECK(c.ratio == 0.0);

    const auto v = sample_nodes(g, [](const Point& x) { return std::sin(2 * x[0]) + x[0] * x[0]; });
    auto w = v;
    for (double& e : w) e += 5.0;
    const auto a = weighted_poincare_ratio(*op, v);
    const auto b = weighted_poincare_ratio(*op, w);
    CHECK_FALSE(a.degenerate);
    CHECK(a.ratio > 0.0);
    CHECK(b.ratio == doctest::Approx(a.ratio).epsilon(1e-10));
    CHECK(b.weighted_mean == doctest::Approx(a.weighted_mean + 5.0).epsilon(1e-12));
  }

  TEST_CASE("Poincaré constants stay comparable as alpha grows with the normalized kernel") {
    std::vector<double> worst;
    for (double alpha : {1.0, 1.5, 1.9}) {
      const auto op = make_op(MeasureSpec::alpha_stable(1, alpha, robust_normalization(alpha)), 2.0, 1.0 / 32, 2.0);
      const auto& g = op->grid();
      double m = 0.0;
      for (int s = 0; s < 30; ++s) {
        CounterRng rng(17, static_cast<std::uint64_t>(s));
        const double a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1), k = rng.uniform(0.5, 4.0), c = rng.uniform(-1, 1);
        const auto v = sample_nodes(g, [&](const Point& x) { return a1 * std::sin(k * x[0] + c) + a2 * x[0] * x[0]; });
        m = std::max(m, weighted_poincare_ratio(*op, v).ratio);
      }
      worst.push_back(m);
    }
    const auto [lo, hi] = std::minmax_element(worst.begin(), worst.end());
    CHECK(*hi <= 1.25 * *lo);
  }

  TEST_CASE("log level sets of constants and doubled data") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5, 0.5), 4.0, 1.0 / 16, 2.0);
    const auto k = SpaceTimeFunction::constant(op, uniform_times(-1.25, 1.0, 1.0 / 64), 2.0);
    const auto ck = log_level_sets(k, {}, 1.5);
    CHECK(ck.sup_lower_product == 0.0);
    CHECK(ck.sup_upper_product == 0.0);
    CHECK(ck.s.size() == 13);

    const LogLevelOptions one{{}, 1e-3};
    const LogLevelOptions two{{}, 2e-3};
    for (const auto& u : small_batch().samples) {
      const auto a = log_level_sets(u, {}, 1.5, one);
      const auto b = log_level_sets(u.scaled(2.0), {}, 1.5, two);
      CHECK(b.a == doctest::Approx(a.a - std::log(2.0)).epsilon(1e-12));
      CHECK(b.lower_measure == a.lower_measure);
      CHECK(b.upper_measure == a.upper_measure);
      CHECK(b.sup_lower_product == a.sup_lower_product);
      CHECK(b.sup_upper_product == a.sup_upper_product);
    }
    CHECK_THROWS_AS(log_level_sets(k.scaled(-1.0), {}, 1.5), Error);
  }

  TEST_CASE("Moser quantities of constants") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.5), 4.0, 1.0 / 16, 2.0);
    const auto times = uniform_times(-1.25, 1.0, 1.0 / 64);
    MoserOptions opt;
    opt.epsilon = 0.0;
    const double kappa = moser_kappa(1, 1.5);
    CHECK(kappa == 2.5);
    std::vector<double> implied;
    for (double c : {1.0, 3.0}) {
      const auto u = SpaceTimeFunction::constant(op, times, c);
      const auto m = moser_check(u, {}, 1.5, MoserMode::NegStep, 0.5, 0.5, 1.0, opt);
      const double small = make_qminus(0.5, 1.5).volume(1);
      const double large = make_qminus(1.0, 1.5).volume(1);
      CHECK(m.lhs == doctest::Approx(std::pow(small, 1.0 / kappa) * std::pow(c, -0.5)).epsilon(1e-12));
      CHECK(m.rhs == doctest::Approx(large * std::pow(c, -0.5)).epsilon(1e-12));
      implied.push_back(m.implied_constant);
    }
    CHECK(implied[1] == doctest::Approx(implied[0]).epsilon(1e-12));
    CHECK(std::isfinite(implied[0]));
  }

  TEST_CASE("G1 case split") {
    CHECK(moser_g1(1, 1.5, 0.5, 1.0) == doctest::Approx(std::pow(0.5, 2.5)).epsilon(1e-14));
    CHECK(moser_g1(2, 1.5, 0.5, 1.0) == doctest::Approx(std::pow(0.5, 3.5)).epsilon(1e-14));
    CHECK(moser_g1(1, 0.5, 0.5, 1.0) == doctest::Approx(std::pow(1.0 - std::sqrt(0.5), 3.0)).epsilon(1e-14));
  }

  TEST_CASE("Moser admissible ranges") {
    const auto& u = small_batch().samples.front();
    const double kappa = moser_kappa(1, 1.5);
    CHECK_THROWS_AS(moser_check(u, {}, 1.5, MoserMode::NegStep, 0.0, 0.5, 1.0), Error);
    CHECK_THROWS_AS(moser_check(u, {}, 1.5, MoserMode::NegIter, 1.5, 0.5, 1.0), Error);
    CHECK_THROWS_AS(moser_check(u, {}, 1.5, MoserMode::PosIter, 1.0 / kappa, 0.5, 1.0), Error);
    CHECK_THROWS_AS(moser_check(u, {}, 1.5, MoserMode::NegStep, 0.5, 0.4, 1.0), Error);
    CHECK_THROWS_AS(moser_check(u, {}, 1.5, MoserMode::NegStep, 0.5, 0.75, 0.75), Error);
    CHECK_NOTHROW(moser_check(u, {}, 1.5, MoserMode::NegIter, 1.0, 0.5, 1.0));
    CHECK_NOTHROW(moser_check(u, {}, 1.5, MoserMode::PosIter, 0.39, 0.5, 1.0));
    CHECK(moser_mode_from_string("positer") == MoserMode::PosIter);
    CHECK_THROWS_AS(moser_mode_from_string("up"), Error);
  }

  TEST_CASE("Moser constants are invariant under rescaling") {
    for (const auto& u : small_batch().samples) {
      for (auto mode : {MoserMode::NegStep, MoserMode::NegIter, MoserMode::PosIter}) {
        MoserOptions one, four, odd;
        one.epsilon = 1e-3;
        four.epsilon = 4e-3;
        odd.epsilon = 3.7e-3;
        const double p = mode == MoserMode::PosIter ? 0.25 : 0.5;
        const auto a = moser_check(u, {}, 1.5, mode, p, 0.5, 0.875, one);
        const auto b = moser_check(u.scaled(4.0), {}, 1.5, mode, p, 0.5, 0.875, four);
        const auto c = moser_check(u.scaled(3.7), {}, 1.5, mode, p, 0.5, 0.875, odd);
        CHECK(b.implied_constant == a.implied_constant);
        CHECK(c.implied_constant == doctest::Approx(a.implied_constant).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("G2 exponent fit recovers a planted power") {
    std::vector<std::vector<MoserReport>> reports;
    for (double c : {1.0, 2.0, 5.0}) {
      std::vector<MoserReport> s;
      for (double R : {0.625, 0.75, 1.0}) {
        MoserReport r;
        r.mode = MoserMode::PosIter;
        r.alpha = 1.0;
        r.r = 0.5;
        r.R = R;
        r.pos_core = c * std::pow(R - 0.5, -1.7);
        s.push_back(r);
      }
      reports.push_back(s);
    }
    const double omega = fit_g2_exponent(reports);
    CHECK(omega == doctest::Approx(1.7).epsilon(1e-12));
    apply_g2_exponent(reports[0][0], omega);
    CHECK(reports[0][0].implied_constant == doctest::Approx(make_qplus(1.0, 1.0).volume(1)).epsilon(1e-12));
  }

  TEST_CASE("Cauchy heat kernel from hat data") {
    const auto spec = MeasureSpec::alpha_stable(1, 1.0, fractional_laplacian_constant(1, 1.0));
    HeatKernelOptions o;
    o.h = 1.0 / 32;
    o.doubled_box_mass = true;
    const auto r = heat_kernel_profile(spec, {0.25, 0.5, 1.0}, o);
    CHECK(r.center[1] == doctest::Approx(2.0 / std::numbers::pi).epsilon(0.05));
    const auto [lo, hi] = std::minmax_element(r.scaled_center.begin(), r.scaled_center.end());
    CHECK(*hi <= 1.1 * *lo);
    for (std::size_t q = 0; q < 3; ++q) {
      CHECK_FALSE(r.truncated[q]);
      CHECK(r.far_min[q] > 0.0);
      CHECK(std::isfinite(r.far_max[q]));
    }
    CHECK(std::abs(r.mass_doubled[1] - r.mass[1]) <= 0.03 * r.mass_doubled[1]);

    const auto stable = MeasureSpec::alpha_stable(1, 1.5, fractional_laplacian_constant(1, 1.5));
    const auto s = heat_kernel_profile(stable, {0.25, 0.5, 1.0}, o);
    const auto [slo, shi] = std::minmax_element(s.scaled_center.begin(), s.scaled_center.end());
    CHECK(*shi <= 1.1 * *slo);
    CHECK_THROWS_AS(heat_kernel_profile(MeasureSpec::axes(1, 1.0), {0.5}, o), Error);
  }

  TEST_CASE("strong Harnack probe separates the axes kernel from the stable one") {
    const std::vector<double> levels{0.5, 1.0, 2.0};
    const auto ax = strong_harnack_probe(MeasureSpec::axes(2, 1.0), levels);
    REQUIRE(ax.ratio.size() == 3);
    CHECK(ax.converged);
    CHECK(ax.ratio[0] < ax.ratio[1]);
    CHECK(ax.ratio[1] < ax.ratio[2]);

    const auto st = strong_harnack_probe(MeasureSpec::alpha_stable(2, 1.0), levels);
    const auto [lo, hi] = std::minmax_element(st.ratio.begin(), st.ratio.end());
    CHECK(*hi <= 2.0 * *lo);

    StrongHarnackOptions sym;
    sym.symmetrize = true;
    const auto flat = strong_harnack_probe(MeasureSpec::axes(2, 1.0), {2.0}, sym);
    CHECK(flat.ratio[0] < 1.1);
    CHECK(flat.ratio[0] < ax.ratio[2]);
  }

  TEST_CASE("L applied to the negative part is bounded by its weighted tail") {
    const auto op = make_op(MeasureSpec::alpha_stable(1, 1.0), 6.0, 1.0 / 16, 1.0);
    for (int s = 0; s < 10; ++s) {
      CounterRng rng(23, static_cast<std::uint64_t>(s));
      const double amp = rng.uniform(0.1, 5.0), centre = rng.uniform(3.0, 9.0) * rng.sign(), width = rng.uniform(0.2, 2.0);
      const double bg = rng.uniform(0.0, 2.0);
      const auto u = [=](const Point& x) {
        if (std::abs(x[0]) < 3.0) return bg + std::cos(x[0]) * std::cos(x[0]);
        return -amp * std::exp(-std::pow((x[0] - centre) / width, 2)) + 0.1 * std::sin(x[0]);
      };
      const auto r = lu_minus_check(*op, u, 0.5);
      CHECK(r.weighted_sup > 0.0);
      CHECK(r.f_max > 0.0);
      CHECK(r.within);
    }
    CHECK_THROWS_AS(lu_minus_check(*op, [](const Point&) { return -1.0; }, 0.5), Error);
  }
}
