#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nllab/error.hpp"
#include "nllab/regularity.hpp"
#include "nllab/rng.hpp"

namespace nllab {

namespace {

struct SamplePoint {
  std::size_t level;
  Point x;
  double value;
};

}  // namespace

HolderReport holder_fit(const SpaceTimeFunction& u, const Cylinder& q_prime, double alpha, const HolderOptions& options) {
  require(u.op != nullptr && u.levels() >= 1, "the Hölder fit needs a space-time function");
  require(alpha > 0.0 && alpha < 2.0, "alpha must lie in (0, 2)");
  require(options.bins >= 2 && options.max_points >= 2, "the fit needs at least two bins and two points");
  const Grid& grid = u.grid();
  const int dim = grid.dim;
  HolderReport rep;

  for (std::size_t k = 0; k < u.levels(); ++k) {
    const auto snap = u.snapshot(k);
    for (double v : snap) rep.sup_norm = std::max(rep.sup_norm, std::abs(v));
  }

  const double tol = 1e-9 * std::max(u.dt, 1e-300);
  std::vector<std::size_t> levels, nodes;
  for (std::size_t k = 0; k < u.levels(); ++k)
    if (u.times[k] >= q_prime.t_lo - tol && u.times[k] <= q_prime.t_hi + tol) levels.push_back(k);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (distance(grid.nodes[i], q_prime.ball.center, dim) <= q_prime.ball.radius * (1.0 + 1e-12)) nodes.push_back(i);
  require(!levels.empty() && !nodes.empty() && levels.size() * nodes.size() >= 2,
          "the cylinder contains fewer than two grid points");

  // Too many points: a seeded uniform subset of the space-time grid points, so that the
  // distribution of pair distances does not depend on the spacings.
  std::vector<std::size_t> chosen(levels.size() * nodes.size());
  std::iota(chosen.begin(), chosen.end(), 0);
  if (chosen.size() > options.max_points) {
    CounterRng rng(options.seed, 0x486f6c646572ULL);
    for (std::size_t a = 0; a < options.max_points; ++a) std::swap(chosen[a], chosen[a + rng.below(chosen.size() - a)]);
    chosen.resize(options.max_points);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<SamplePoint> pts;
  pts.reserve(chosen.size());
  for (std::size_t c : chosen) {
    const std::size_t k = levels[c / nodes.size()];
    const std::size_t i = nodes[c % nodes.size()];
    pts.push_back({k, grid.nodes[i], u.at(k, i)});
  }
  rep.points = pts.size();

  const auto [lo_it, hi_it] =
      std::minmax_element(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
  if (hi_it->value == lo_it->value) {
    rep.constant = true;
    return rep;
  }

  const double diameter = 2.0 * q_prime.ball.radius + std::pow(q_prime.duration(), 1.0 / alpha);
  rep.window_lo = std::max(options.min_distance_in_h * grid.h, options.min_distance);
  rep.window_hi = options.max_distance_fraction * diameter;
  require(rep.window_hi > rep.window_lo, "the fitting window [lo, hi] is empty; refine the grid or enlarge Q'");

  // |t_a - t_b|^(1/alpha) by level difference.
  std::vector<double> time_term(u.levels());
  for (std::size_t k = 0; k < u.levels(); ++k) time_term[k] = std::pow(std::abs(u.times[k] - u.times[0]), 1.0 / alpha);

  const int nb = options.bins;
  const double log_lo = std::log(rep.window_lo);
  const double bin_scale = nb / (std::log(rep.window_hi) - log_lo);
  const auto nbs = static_cast<std::size_t>(nb);
  std::vector<double> osc(nbs, 0.0), dmax(nbs, 0.0), log_sum(nbs, 0.0), logd_sum(nbs, 0.0);
  std::vector<std::size_t> count(nbs, 0), nonzero(nbs, 0);
  // Pairwise least squares of log|du| on log d, over pairs with du != 0.
  double px = 0.0, py = 0.0, pxx = 0.0, pxy = 0.0, pyy = 0.0, pn = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const std::size_t dl = pts[a].level > pts[b].level ? pts[a].level - pts[b].level : pts[b].level - pts[a].level;
      const double d = distance(pts[a].x, pts[b].x, dim) + time_term[dl];
      if (d > rep.window_hi) continue;
      const double ld = std::log(std::max(d, rep.window_lo));
      const auto bin = static_cast<std::size_t>(std::clamp(static_cast<int>((ld - log_lo) * bin_scale), 0, nb - 1));
      const double du = std::abs(pts[a].value - pts[b].value);
      osc[bin] = std::max(osc[bin], du);
      dmax[bin] = std::max(dmax[bin], d);
      ++count[bin];
      if (d < rep.window_lo) continue;
      ++rep.pairs;
      if (du > 0.0) {
        const double lu = std::log(du);
        log_sum[bin] += lu;
        logd_sum[bin] += ld;
        ++nonzero[bin];
        px += ld;
        py += lu;
        pxx += ld * ld;
        pxy += ld * lu;
        pyy += lu * lu;
        pn += 1.0;
      }
    }
  }

  if (options.method == HolderMethod::Modulus)
    for (std::size_t q = 1; q < nbs; ++q) {
      osc[q] = std::max(osc[q], osc[q - 1]);
      dmax[q] = std::max(dmax[q], dmax[q - 1]);
      count[q] += count[q - 1];
    }
  std::vector<double> xs, ys;
  for (std::size_t q = 0; q < nbs; ++q) {
    if (count[q] == 0 || osc[q] <= 0.0) continue;
    if (options.method != HolderMethod::Pairwise) {
      rep.bin_distance.push_back(dmax[q]);
      rep.bin_oscillation.push_back(osc[q]);
    } else {
      rep.bin_distance.push_back(std::exp(logd_sum[q] / nonzero[q]));
      rep.bin_oscillation.push_back(std::exp(log_sum[q] / nonzero[q]));
    }
    xs.push_back(std::log(rep.bin_distance.back()));
    ys.push_back(std::log(rep.bin_oscillation.back()));
  }
  if (xs.size() < 2)
    fail(ErrorCode::NumericalFailure, "fewer than two distance bins with positive oscillation; the fit is undefined");

  if (options.method == HolderMethod::Pairwise) {
    const double sxx = pxx - px * px / pn;
    const double sxy = pxy - px * py / pn;
    rep.beta = sxy / sxx;
    const double intercept = (py - rep.beta * px) / pn;
    const double rss = std::max(0.0, (pyy - py * py / pn) - rep.beta * sxy);
    rep.fit_residual = std::sqrt(rss / pn);
    rep.seminorm = std::exp(intercept);
    rep.eta = rep.beta > 0.0 ? std::pow(rep.sup_norm / rep.seminorm, 1.0 / rep.beta) : 0.0;
    return rep;
  }

  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t q = 0; q < xs.size(); ++q) {
    sxx += (xs[q] - mx) * (xs[q] - mx);
    sxy += (xs[q] - mx) * (ys[q] - my);
  }
  rep.beta = sxy / sxx;
  const double intercept = my - rep.beta * mx;
  double rss = 0.0;
  for (std::size_t q = 0; q < xs.size(); ++q) {
    const double e = ys[q] - intercept - rep.beta * xs[q];
    rss += e * e;
  }
  rep.fit_residual = std::sqrt(rss / n);
  rep.seminorm = std::exp(intercept);
  rep.eta = rep.beta > 0.0 ? std::pow(rep.sup_norm / rep.seminorm, 1.0 / rep.beta) : 0.0;
  return rep;
}

}  // namespace nllab
