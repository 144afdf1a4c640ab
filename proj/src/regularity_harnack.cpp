#include <algorithm>
#include <cmath>
#include <limits>

#include "nllab/error.hpp"
#include "nllab/regularity.hpp"
#include "regularity_common.hpp"

namespace nllab {

HarnackValue harnack_quotient(const SpaceTimeFunction& u, const SourceTerm& f, double alpha) {
  require(u.op != nullptr && u.levels() >= 2, "the Harnack quotient needs a space-time function");
  require(alpha > 0.0 && alpha < 2.0, "alpha must lie in (0, 2)");
  const Grid& grid = u.grid();
  const CylinderWeights lower = cylinder_weights(make_uminus(alpha), grid, u.times);
  const CylinderWeights upper = cylinder_weights(make_uplus(alpha), grid, u.times);
  require(!upper.closed_time_steps.empty() && !upper.closed_space_nodes.empty(),
          "the grid has no points in the closure of U+");

  HarnackValue out;
  out.l1_lower = detail::cylinder_sum(lower, [&](std::size_t k, std::size_t i) { return std::abs(u.at(k, i)); });
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k : upper.closed_time_steps)
    for (std::size_t i : upper.closed_space_nodes) inf = std::min(inf, u.at(k, i));
  out.inf_upper = inf;
  out.f_sup = detail::source_sup(u, f);
  const double denominator = out.inf_upper + out.f_sup;
  if (denominator <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.quotient = out.l1_lower / denominator;
  return out;
}

HarnackReport harnack_batch(const std::vector<SpaceTimeFunction>& samples, const SourceTerm& f, double alpha) {
  require(!samples.empty(), "the Harnack batch is empty");
  HarnackReport rep;
  rep.alpha = alpha;
  rep.dim = samples.front().grid().dim;
  rep.h = samples.front().grid().h;
  rep.dt = samples.front().dt;
  rep.samples.resize(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < samples.size(); ++s) rep.samples[s] = harnack_quotient(samples[s], f, alpha);
  for (const auto& v : rep.samples) {
    if (v.degenerate) {
      ++rep.degenerate_count;
      continue;
    }
    rep.max_quotient = std::max(rep.max_quotient, v.quotient);
  }
  return rep;
}

double refinement_drift(double coarse, double fine) {
  require(coarse > 0.0, "refinement drift needs a positive coarse value");
  return std::abs(fine - coarse) / coarse;
}

LogLevelReport log_level_sets(const SpaceTimeFunction& u, const SourceTerm& f, double alpha,
                              const LogLevelOptions& options) {
  require(u.op != nullptr, "log level sets need a space-time function");
  require(options.epsilon >= 0.0, "epsilon must be nonnegative");
  const Grid& grid = u.grid();
  require(grid.box_radius >= 1.5, "the grid must cover B_3/2");
  LogLevelReport rep;
  rep.s = options.s_values;
  if (rep.s.empty())
    for (int k = -4; k <= 8; ++k) rep.s.push_back(std::pow(2.0, 0.5 * k));
  for (double s : rep.s) require(s > 0.0, "level parameters s must be positive");
  rep.shift = detail::source_sup(u, f) + options.epsilon;

  const std::size_t junction = u.level_of(0.0);
  const CylinderWeights plus = cylinder_weights(make_qplus(1.0, alpha), grid, u.times);
  const CylinderWeights minus = cylinder_weights(make_qminus(1.0, alpha), grid, u.times);

  // Work with u~ / max u~ so that rescaling u~ by a power of two changes nothing below.
  std::vector<std::size_t> psi_nodes;
  std::vector<double> psi;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = norm(grid.nodes[i], grid.dim);
    if (r < 1.5) {
      psi_nodes.push_back(i);
      psi.push_back(std::min(1.5 - r, 1.0));
    }
  }
  double ref = 0.0;
  for (std::size_t i : psi_nodes) ref = std::max(ref, detail::shifted(u, junction, i, rep.shift));
  auto track = [&](std::size_t k, std::size_t i) { ref = std::max(ref, detail::shifted(u, k, i, rep.shift)); };
  detail::for_each_cylinder_point(plus, track);
  detail::for_each_cylinder_point(minus, track);

  double num = 0.0, den = 0.0;
  for (std::size_t q = 0; q < psi_nodes.size(); ++q) {
    num += psi[q] * std::log(detail::shifted(u, junction, psi_nodes[q], rep.shift) / ref);
    den += psi[q];
  }
  const double a_normalized = -num / den;
  rep.a = a_normalized - std::log(ref);

  // z = log u~ + a at every weighted point of each cylinder.
  auto collect = [&](const CylinderWeights& w) {
    std::vector<std::pair<double, double>> out;  // (z, weight)
    for (std::size_t a = 0; a < w.time_steps.size(); ++a)
      for (std::size_t b = 0; b < w.space_nodes.size(); ++b) {
        const double v = detail::shifted(u, w.time_steps[a], w.space_nodes[b], rep.shift) / ref;
        out.emplace_back(std::log(v) + a_normalized, w.time_weights[a] * w.space_weights[b]);
      }
    return out;
  };
  const auto zp = collect(plus);
  const auto zm = collect(minus);
  for (double s : rep.s) {
    double lo = 0.0, hi = 0.0;
    for (const auto& [z, w] : zp)
      if (z < -s) lo += w;
    for (const auto& [z, w] : zm)
      if (z > s) hi += w;
    rep.lower_measure.push_back(lo);
    rep.upper_measure.push_back(hi);
    rep.sup_lower_product = std::max(rep.sup_lower_product, s * lo);
    rep.sup_upper_product = std::max(rep.sup_upper_product, s * hi);
  }
  return rep;
}

}  // namespace nllab
