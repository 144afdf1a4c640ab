#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nllab/error.hpp"
#include "nllab/regularity.hpp"
#include "regularity_common.hpp"

namespace nllab {

const char* to_string(MoserMode mode) {
  switch (mode) {
    case MoserMode::NegStep: return "negstep";
    case MoserMode::NegIter: return "negiter";
    case MoserMode::PosIter: return "positer";
  }
  return "?";
}

MoserMode moser_mode_from_string(const std::string& name) {
  if (name == "negstep") return MoserMode::NegStep;
  if (name == "negiter") return MoserMode::NegIter;
  if (name == "positer") return MoserMode::PosIter;
  fail(ErrorCode::InvalidInput, "unknown Moser mode '" + name + "' (expected negstep, negiter or positer)");
}

double moser_kappa(int dim, double alpha) { return 1.0 + alpha / dim; }

double moser_g1(int dim, double alpha, double r, double R) {
  if (alpha >= 1.0) return std::pow(R - r, dim + alpha);
  return std::pow(std::pow(R, alpha) - std::pow(r, alpha), (dim + alpha) / alpha);
}

MoserReport moser_check(const SpaceTimeFunction& u, const SourceTerm& f, double alpha, MoserMode mode, double p,
                        double r, double R, const MoserOptions& options) {
  require(u.op != nullptr, "the Moser check needs a space-time function");
  require(alpha > 0.0 && alpha < 2.0, "alpha must lie in (0, 2)");
  require(0.5 <= r && r < R && R <= 1.0, "radii must satisfy 1/2 <= r < R <= 1");
  require(options.epsilon >= 0.0, "epsilon must be nonnegative");
  const Grid& grid = u.grid();
  MoserReport rep;
  rep.mode = mode;
  rep.dim = grid.dim;
  rep.alpha = alpha;
  rep.p = p;
  rep.r = r;
  rep.R = R;
  rep.kappa = moser_kappa(grid.dim, alpha);
  switch (mode) {
    case MoserMode::NegStep:
    case MoserMode::NegIter:
      require(p > 0.0 && p <= 1.0, "negative-exponent modes need p in (0, 1]");
      break;
    case MoserMode::PosIter:
      require(p > 0.0 && p < 1.0 / rep.kappa, "the positive mode needs p in (0, 1/kappa)");
      break;
  }
  rep.shift = detail::source_sup(u, f) + options.epsilon;
  rep.a_prime = (p + 1.0) * (p + 1.0) * (std::pow(R - r, -alpha) + 1.0 / (std::pow(R, alpha) - std::pow(r, alpha)));
  rep.g1 = moser_g1(grid.dim, alpha, r, R);
  rep.g2 = std::pow(R - r, options.g2_exponent);

  const bool positive = mode == MoserMode::PosIter;
  const Cylinder small = positive ? make_qplus(r, alpha) : make_qminus(r, alpha);
  const Cylinder large = positive ? make_qplus(R, alpha) : make_qminus(R, alpha);
  const CylinderWeights ws = cylinder_weights(small, grid, u.times);
  const CylinderWeights wl = cylinder_weights(large, grid, u.times);

  // Normalize by the largest value so that the implied constants do not see the scale of u~.
  double ref = 0.0;
  detail::for_each_cylinder_point(wl, [&](std::size_t k, std::size_t i) {
    ref = std::max(ref, detail::shifted(u, k, i, rep.shift));
  });
  detail::for_each_cylinder_point(ws, [&](std::size_t k, std::size_t i) {
    ref = std::max(ref, detail::shifted(u, k, i, rep.shift));
  });
  auto v = [&](std::size_t k, std::size_t i) { return detail::shifted(u, k, i, rep.shift) / ref; };

  switch (mode) {
    case MoserMode::NegStep: {
      const double lhs = std::pow(detail::cylinder_sum(ws, [&](auto k, auto i) { return std::pow(v(k, i), -rep.kappa * p); }),
                                  1.0 / rep.kappa);
      const double rhs = detail::cylinder_sum(wl, [&](auto k, auto i) { return std::pow(v(k, i), -p); });
      rep.implied_constant = lhs / (rep.a_prime * rhs);
      rep.lhs = lhs * std::pow(ref, -p);
      rep.rhs = rhs * std::pow(ref, -p);
      break;
    }
    case MoserMode::NegIter: {
      require(!ws.closed_time_steps.empty() && !ws.closed_space_nodes.empty(), "no grid points in the closed cylinder");
      double sup = 0.0;
      for (std::size_t k : ws.closed_time_steps)
        for (std::size_t i : ws.closed_space_nodes) sup = std::max(sup, 1.0 / v(k, i));
      const double rhs = std::pow(detail::cylinder_sum(wl, [&](auto k, auto i) { return std::pow(v(k, i), -p); }), 1.0 / p);
      rep.implied_constant = rep.g1 * std::pow(sup / rhs, p);
      rep.lhs = sup / ref;
      rep.rhs = rhs / ref;
      break;
    }
    case MoserMode::PosIter: {
      const double lhs = detail::cylinder_sum(ws, [&](auto k, auto i) { return v(k, i); });
      const double rhs = std::pow(detail::cylinder_sum(wl, [&](auto k, auto i) { return std::pow(v(k, i), p); }), 1.0 / p);
      rep.pos_core = std::pow(lhs / rhs, 1.0 / (1.0 / p - 1.0));
      rep.lhs = lhs * ref;
      rep.rhs = rhs * ref;
      apply_g2_exponent(rep, options.g2_exponent);
      break;
    }
  }
  return rep;
}

void apply_g2_exponent(MoserReport& report, double omega) {
  require(report.mode == MoserMode::PosIter, "G2 applies to the positive mode only");
  report.g2 = std::pow(report.R - report.r, omega);
  const double unit = make_qplus(1.0, report.alpha).volume(report.dim);
  report.implied_constant = unit * report.g2 * report.pos_core;
}

double fit_g2_exponent(const std::vector<std::vector<MoserReport>>& reports) {
  double sxx = 0.0, sxy = 0.0;
  for (const auto& sample : reports) {
    if (sample.empty()) continue;
    double mx = 0.0, my = 0.0;
    for (const auto& r : sample) {
      require(r.mode == MoserMode::PosIter && r.pos_core > 0.0, "the G2 fit needs positive-mode reports");
      mx += std::log(r.R - r.r);
      my += std::log(r.pos_core);
    }
    mx /= static_cast<double>(sample.size());
    my /= static_cast<double>(sample.size());
    for (const auto& r : sample) {
      const double x = std::log(r.R - r.r) - mx;
      sxx += x * x;
      sxy += x * (std::log(r.pos_core) - my);
    }
  }
  require(sxx > 0.0, "the G2 fit needs at least two distinct values of R - r");
  return -sxy / sxx;
}

PoincareReport weighted_poincare_ratio(const DiscreteOperator& op, std::span<const double> v) {
  const Grid& grid = op.grid();
  require(v.size() == grid.size(), "v must hold one value per box node");
  require(grid.box_radius >= 1.5, "the grid must cover B_3/2");
  std::vector<double> psi(grid.size(), 0.0);
  double sw = 0.0, swv = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(std::isfinite(v[i]), "v has a non-finite entry");
    const double r = norm(grid.nodes[i], grid.dim);
    if (r >= 1.5) continue;
    psi[i] = std::min(1.5 - r, 1.0);
    sw += psi[i];
    swv += psi[i] * v[i];
  }
  const double hd = std::pow(grid.h, grid.dim);
  PoincareReport rep;
  rep.weighted_mean = swv / sw;
  const auto& coeff = op.coefficients();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (psi[i] == 0.0) continue;
    const double d = v[i] - rep.weighted_mean;
    rep.lhs += d * d * psi[i] * hd;
    double row = 0.0;
    op.for_each_neighbour(i, [&](std::size_t j) {
      if (psi[j] == 0.0) return;
      const double w = op.weight(i, j);
      if (w == 0.0) return;
      const double e = v[i] - v[j];
      row += e * e * std::min(psi[i], psi[j]) * coeff(0.0, grid.nodes[i], grid.nodes[j]) * w;
    });
    rep.rhs += row * hd;
  }
  if (rep.rhs <= 0.0) {
    rep.degenerate = true;
    rep.ratio = 0.0;
    return rep;
  }
  rep.ratio = rep.lhs / rep.rhs;
  return rep;
}

}  // namespace nllab
