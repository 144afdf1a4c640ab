#include "nllab/measures.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <fstream>
#include <sstream>

#include "nllab/error.hpp"

namespace nllab {

namespace {

// ∫_a^b c r^e dr with 0 <= a <= b <= inf; +inf when divergent.
double power_integral(double c, double e, double a, double b) {
  if (!(b > a)) return 0.0;
  const double E = e + 1.0;
  if (std::abs(E) < 1e-14) {
    if (a == 0.0 || std::isinf(b)) return kInf;
    return c * std::log(b / a);
  }
  if (E < 0.0 && a == 0.0) return kInf;
  if (E > 0.0 && std::isinf(b)) return kInf;
  if (a > 0.0 && std::isfinite(b) && b - a < 0.5 * a) {
    // Short interval: a^E (exp(E log(b/a)) - 1) / E avoids cancellation.
    return c * std::pow(a, E) * std::expm1(E * std::log1p((b - a) / a)) / E;
  }
  const double fb = std::isinf(b) ? 0.0 : std::pow(b, E);
  const double fa = a == 0.0 ? 0.0 : std::pow(a, E);
  return c * (fb - fa) / E;
}

bool absolutely_continuous_2d(const MeasureSpec& spec) {
  return spec.dim == 2 && spec.kind != MeasureKind::Axes;
}

// Singular order governing integrability of |z|^q near the diagonal.
void check_diagonal(const MeasureSpec& spec, const SetDescriptor& set, const Point& x, double q) {
  if (!touches(set, x, spec.dim)) return;
  bool ok = false;
  if (spec.kind == MeasureKind::Tabulated) {
    const double p = (spec.dim == 2) ? q + 1.0 : q;
    ok = spec.table->integrable_at_zero(p);
  } else {
    ok = q > effective_order(spec);
  }
  if (!ok)
    fail(ErrorCode::InvalidInput,
         "set touches the diagonal singularity at x; the integral of |x-y|^" + std::to_string(q) + " diverges");
}

bool unbounded(const SetDescriptor& set) {
  return std::holds_alternative<Complement>(set) || std::holds_alternative<BoxComplement>(set);
}

void check_tail(const MeasureSpec& spec, const SetDescriptor& set, double q) {
  if (!unbounded(set)) return;
  bool ok = false;
  if (spec.kind == MeasureKind::Tabulated) {
    const double p = (spec.dim == 2) ? q + 1.0 : q;
    ok = spec.table->integrable_at_infinity(p);
  } else {
    ok = q < spec.alpha;
  }
  if (!ok) fail(ErrorCode::InvalidInput, "tail integral of |x-y|^" + std::to_string(q) + " diverges");
}

// Whether the set is rotationally symmetric about x, and its radial extent.
bool centered_radial(const SetDescriptor& set, const Point& x, int dim, double& a, double& b) {
  auto same = [&](const Point& c) { return distance(c, x, dim) == 0.0; };
  if (const auto* ball = std::get_if<Ball>(&set); ball && same(ball->center)) {
    a = 0.0;
    b = ball->radius;
    return true;
  }
  if (const auto* ann = std::get_if<Annulus>(&set); ann && same(ann->center)) {
    a = ann->inner;
    b = ann->outer;
    return true;
  }
  if (const auto* comp = std::get_if<Complement>(&set); comp && same(comp->ball.center)) {
    a = comp->ball.radius;
    b = kInf;
    return true;
  }
  return false;
}

// Angles in [0, 2pi) where the ray-set intersection changes combinatorially.
void add_set_breakpoints(const SetDescriptor& set, const Point& x, std::vector<double>& cuts) {
  auto angle_of = [&](double px, double py) {
    double a = std::atan2(py - x[1], px - x[0]);
    if (a < 0.0) a += 2.0 * kPi;
    return a;
  };
  auto add_box = [&](const Cell& c) {
    for (double px : {c.lo[0], c.hi[0]})
      for (double py : {c.lo[1], c.hi[1]})
        if (px != x[0] || py != x[1]) cuts.push_back(angle_of(px, py));
  };
  auto add_ball = [&](const Ball& b) {
    const double d = distance(b.center, x, 2);
    if (d <= b.radius || d == 0.0) return;
    const double c = angle_of(b.center[0], b.center[1]);
    const double w = std::asin(b.radius / d);
    for (double a : {c - w, c + w}) cuts.push_back(std::fmod(a + 4.0 * kPi, 2.0 * kPi));
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          add_ball(s);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          add_ball(Ball{s.center, s.inner});
          add_ball(Ball{s.center, s.outer});
        } else if constexpr (std::is_same_v<T, Cell>) {
          add_box(s);
        } else if constexpr (std::is_same_v<T, Complement>) {
          add_ball(s.ball);
        } else {
          add_box(s.box);
        }
      },
      set);
}

// Angles where the cusp boundary curves |z_j| = |z_i|^{1/s} cross the edges of a box,
// seen from x. The radial integrand has a kink there.
void add_cusp_edge_breakpoints(const SetDescriptor& set, const Point& x, double s, std::vector<double>& cuts) {
  const Cell* box = std::get_if<Cell>(&set);
  if (!box) {
    if (const auto* bc = std::get_if<BoxComplement>(&set)) box = &bc->box;
  }
  if (!box) return;
  auto push = [&](double z1, double z2) {
    if (z1 == 0.0 && z2 == 0.0) return;
    double a = std::atan2(z2, z1);
    if (a < 0.0) a += 2.0 * kPi;
    cuts.push_back(a);
  };
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    const double lo = box->lo[other] - x[other];
    const double hi = box->hi[other] - x[other];
    for (double edge : {box->lo[axis] - x[axis], box->hi[axis] - x[axis]}) {
      const double c = std::abs(edge);
      if (c == 0.0) continue;
      for (double m : {std::pow(c, 1.0 / s), std::pow(c, s)}) {
        for (double w : {m, -m}) {
          if (w <= lo || w >= hi) continue;
          if (axis == 0) push(edge, w);
          else push(w, edge);
        }
      }
    }
  }
}

constexpr double kRelTol = 1e-11;
constexpr double kAcceptRelError = 1e-7;

// Gauss-Kronrod by default. When the set contains x, the cusp cutoff vanishes like a
// power of the angle at the axes and tanh-sinh handles those endpoint singularities.
template <class F>
QuadResult adaptive(F&& f, double a, double b, bool endpoint_singular = false, double tol = kRelTol,
                    unsigned depth = 18) {
  double err = 0.0;
  double l1 = 0.0;
  double v = 0.0;
  if (endpoint_singular) {
    static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    v = ts.integrate(f, a, b, tol, &err, &l1);
  } else {
    v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, tol, &err, &l1);
  }
  if (!std::isfinite(v)) fail(ErrorCode::NumericalFailure, "quadrature produced a non-finite value");
  return {v, err};
}

// Integrates over consecutive pieces with an error goal relative to the whole integral,
// so that thin pieces near box corners are not refined down to roundoff.
template <class F>
QuadResult piecewise(F&& f, const std::vector<double>& cuts, bool endpoint_singular) {
  std::vector<double> rough(cuts.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] - cuts[k] < 1e-14) continue;
    rough[k] = std::abs(adaptive(f, cuts[k], cuts[k + 1], false, kRelTol, 0).value);
    total += rough[k];
  }
  QuadResult out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] - cuts[k] < 1e-14) continue;
    const double tol = rough[k] > 0.0 ? std::clamp(kRelTol * total / rough[k], kRelTol, 1e-3) : 1e-3;
    const auto piece = adaptive(f, cuts[k], cuts[k + 1], endpoint_singular, tol);
    out.value += piece.value;
    out.error += piece.error;
  }
  return out;
}

QuadResult polar_integral(const MeasureSpec& spec, const Point& x, const SetDescriptor& set, double q) {
  const bool cusp = spec.kind == MeasureKind::Cusp;
  auto radial = [&](double phi) {
    const Point u{std::cos(phi), std::sin(phi)};
    const RayIntervals iv = ray_intervals(set, x, u, 2);
    const double cut = cusp ? cusp_radius_threshold(spec.s, fold_to_axis(phi)) : 0.0;
    double total = 0.0;
    for (int k = 0; k < iv.n; ++k) {
      const double lo = std::max(iv.v[k].a, cut);
      if (iv.v[k].b > lo) total += radial_power_integral(spec, lo, iv.v[k].b, q + 1.0);
    }
    return total;
  };

  double a = 0.0;
  double b = 0.0;
  if (centered_radial(set, x, 2, a, b)) {
    if (!cusp) return {2.0 * kPi * radial_power_integral(spec, a, b, q + 1.0), 0.0};
    // Eight-fold symmetry: integrate the folded angle over [0, pi/4].
    std::vector<double> cuts{0.0, kPi / 4.0};
    for (double r : {a, b})
      if (r > 0.0 && std::isfinite(r) && r < std::sqrt(2.0)) cuts.push_back(cusp_geometry(spec.s, r).theta);
    std::sort(cuts.begin(), cuts.end());
    QuadResult out = piecewise(radial, cuts, cusp && a == 0.0);
    out.value *= 8.0;
    out.error *= 8.0;
    return out;
  }

  std::vector<double> cuts{0.0, 2.0 * kPi};
  add_set_breakpoints(set, x, cuts);
  if (cusp) {
    for (int k = 1; k < 8; ++k) cuts.push_back(k * kPi / 4.0);
    add_cusp_edge_breakpoints(set, x, spec.s, cuts);
  }
  std::sort(cuts.begin(), cuts.end());
  const bool singular = cusp && touches(set, x, 2);
  const QuadResult out = piecewise(radial, cuts, singular);
  const double l1 = std::abs(out.value);
  if (out.error > kAcceptRelError * l1 + 1e-300 && out.error > 1e-14)
    fail(ErrorCode::NumericalFailure,
         "polar quadrature did not converge: achieved error " + std::to_string(out.error));
  return out;
}

}  // namespace

const char* to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::AlphaStable: return "alpha_stable";
    case MeasureKind::Axes: return "axes";
    case MeasureKind::Cusp: return "cusp";
    case MeasureKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

MeasureKind measure_kind_from_string(const std::string& name) {
  if (name == "alpha_stable" || name == "alphastable") return MeasureKind::AlphaStable;
  if (name == "axes") return MeasureKind::Axes;
  if (name == "cusp") return MeasureKind::Cusp;
  if (name == "tabulated") return MeasureKind::Tabulated;
  fail(ErrorCode::InvalidInput, "unknown measure kind '" + name + "'");
}

// ---------------------------------------------------------------- RadialTable

RadialTable::RadialTable(std::vector<double> radius, std::vector<double> density,
                         std::optional<double> inner_exponent, std::optional<double> outer_exponent)
    : radius_(std::move(radius)), density_(std::move(density)), inner_(inner_exponent), outer_(outer_exponent) {
  require(radius_.size() == density_.size(), "table columns differ in length");
  require(radius_.size() >= 2, "table needs at least two rows");
  for (std::size_t j = 0; j < radius_.size(); ++j) {
    require(std::isfinite(radius_[j]) && radius_[j] > 0.0, "table radii must be positive");
    require(std::isfinite(density_[j]) && density_[j] > 0.0, "table densities must be positive");
    if (j > 0) require(radius_[j] > radius_[j - 1], "table radii must be strictly increasing");
  }
  for (std::size_t j = 0; j + 1 < radius_.size(); ++j)
    slope_.push_back(std::log(density_[j + 1] / density_[j]) / std::log(radius_[j + 1] / radius_[j]));
}

RadialTable RadialTable::parse(std::istream& in, std::optional<double> inner_exponent,
                               std::optional<double> outer_exponent) {
  std::vector<double> r;
  std::vector<double> k;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a = 0.0;
    double b = 0.0;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) fail(ErrorCode::InvalidInput, "table line " + std::to_string(lineno) + ": expected two columns");
    r.push_back(a);
    k.push_back(b);
  }
  return RadialTable(std::move(r), std::move(k), inner_exponent, outer_exponent);
}

RadialTable RadialTable::load(const std::string& path, std::optional<double> inner_exponent,
                              std::optional<double> outer_exponent) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidInput, "cannot open kernel table '" + path + "'");
  return parse(in, inner_exponent, outer_exponent);
}

double RadialTable::density(double r) const {
  if (r < radius_.front()) {
    if (!inner_) fail(ErrorCode::InvalidInput, "table queried below its first radius without an inner exponent");
    return density_.front() * std::pow(r / radius_.front(), -*inner_);
  }
  if (r > radius_.back()) {
    if (!outer_) fail(ErrorCode::InvalidInput, "table queried beyond its last radius without an outer exponent");
    return density_.back() * std::pow(r / radius_.back(), -*outer_);
  }
  const auto it = std::upper_bound(radius_.begin(), radius_.end(), r);
  const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - radius_.begin()) - 1, slope_.size() - 1);
  return density_[j] * std::pow(r / radius_[j], slope_[j]);
}

double RadialTable::segment_integral(double k0, double r0, double e, double a, double b, double p) const {
  // ∫_a^b k0 (r/r0)^e r^p dr = k0 r0^{p+1} ∫_{a/r0}^{b/r0} t^{e+p} dt
  return power_integral(k0 * std::pow(r0, p + 1.0), e + p, a / r0, b / r0);
}

double RadialTable::integrate(double a, double b, double p) const {
  if (!(b > a)) return 0.0;
  double total = 0.0;
  const double r0 = radius_.front();
  const double rn = radius_.back();
  if (a < r0) {
    if (!inner_) fail(ErrorCode::InvalidInput, "table queried below its first radius without an inner exponent");
    total += segment_integral(density_.front(), r0, -*inner_, a, std::min(b, r0), p);
  }
  for (std::size_t j = 0; j < slope_.size(); ++j) {
    const double lo = std::max(a, radius_[j]);
    const double hi = std::min(b, radius_[j + 1]);
    if (hi > lo) total += segment_integral(density_[j], radius_[j], slope_[j], lo, hi, p);
  }
  if (b > rn) {
    if (!outer_) fail(ErrorCode::InvalidInput, "table queried beyond its last radius without an outer exponent");
    total += segment_integral(density_.back(), rn, -*outer_, std::max(a, rn), b, p);
  }
  return total;
}

bool RadialTable::integrable_at_zero(double p) const { return inner_ && p - *inner_ > -1.0; }
bool RadialTable::integrable_at_infinity(double p) const { return outer_ && p - *outer_ < -1.0; }

// ---------------------------------------------------------------- MeasureSpec

void MeasureSpec::validate() const {
  require(dim == 1 || dim == 2, "dimension d must be 1 or 2");
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 2.0, "alpha must lie in (0,2)");
  require(std::isfinite(normalization) && normalization > 0.0, "normalization must be positive and finite");
  if (kind == MeasureKind::Cusp) {
    require(dim == 2, "cusp measure requires d = 2");
    require(std::isfinite(s) && s > 0.0 && s < 1.0, "cusp exponent s must lie in (0,1)");
    const double beta = 1.0 - 1.0 / s + alpha;
    require(beta > 0.0, "cusp effective order beta = (1 - 1/s) + alpha = " + std::to_string(beta) + " must be positive");
  }
  if (kind == MeasureKind::Tabulated) require(table != nullptr, "tabulated kernel requires a table");
}

MeasureSpec MeasureSpec::alpha_stable(int dim, double alpha, double normalization) {
  MeasureSpec m;
  m.kind = MeasureKind::AlphaStable;
  m.dim = dim;
  m.alpha = alpha;
  m.normalization = normalization;
  m.validate();
  return m;
}

MeasureSpec MeasureSpec::axes(int dim, double alpha, double normalization) {
  MeasureSpec m = alpha_stable(dim, alpha, normalization);
  m.kind = MeasureKind::Axes;
  return m;
}

MeasureSpec MeasureSpec::cusp(double alpha, double s, double normalization) {
  MeasureSpec m;
  m.kind = MeasureKind::Cusp;
  m.dim = 2;
  m.alpha = alpha;
  m.s = s;
  m.normalization = normalization;
  m.validate();
  return m;
}

MeasureSpec MeasureSpec::tabulated(int dim, double alpha, std::shared_ptr<const RadialTable> table,
                                   double normalization) {
  MeasureSpec m;
  m.kind = MeasureKind::Tabulated;
  m.dim = dim;
  m.alpha = alpha;
  m.normalization = normalization;
  m.table = std::move(table);
  m.validate();
  return m;
}

double fractional_laplacian_constant(int dim, double alpha) {
  return alpha * std::pow(2.0, alpha - 1.0) * std::tgamma(0.5 * (dim + alpha)) /
         (std::pow(kPi, 0.5 * dim) * std::tgamma(1.0 - 0.5 * alpha));
}

double sphere_area(int dim) { return dim == 1 ? 2.0 : 2.0 * kPi; }

double effective_order(const MeasureSpec& spec) {
  spec.validate();
  if (spec.kind == MeasureKind::Cusp) return 1.0 - 1.0 / spec.s + spec.alpha;
  return spec.alpha;
}

double radial_density(const MeasureSpec& spec, double r) {
  if (spec.kind == MeasureKind::Tabulated) return spec.normalization * spec.table->density(r);
  return spec.normalization * std::pow(r, -spec.dim - spec.alpha);
}

double line_density(const MeasureSpec& spec, double r) {
  if (spec.kind == MeasureKind::Tabulated) return spec.normalization * spec.table->density(r);
  return spec.normalization * std::pow(r, -1.0 - spec.alpha);
}

double line_power_integral(const MeasureSpec& spec, double a, double b, double p) {
  if (spec.kind == MeasureKind::Tabulated) return spec.normalization * spec.table->integrate(a, b, p);
  return power_integral(spec.normalization, p - 1.0 - spec.alpha, a, b);
}

double radial_power_integral(const MeasureSpec& spec, double a, double b, double p) {
  if (spec.kind == MeasureKind::Tabulated) return spec.normalization * spec.table->integrate(a, b, p);
  return power_integral(spec.normalization, p - 2.0 - spec.alpha, a, b);
}

// ---------------------------------------------------------------- cusp helpers

CuspGeometry cusp_geometry(double s, double r) {
  require(s > 0.0 && s < 1.0, "cusp exponent s must lie in (0,1)");
  require(r > 0.0 && std::isfinite(r), "radius must be positive");
  auto f = [&](double z) { return z * z + std::pow(z, 2.0 * s) - r * r; };
  boost::math::tools::eps_tolerance<double> tol(42);
  std::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, r, -r * r, std::pow(r, 2.0 * s), tol, iters);
  const double z1 = 0.5 * (lo + hi);
  const double theta = std::asin(std::min(1.0, z1 / std::sqrt(std::pow(z1, 2.0 * s) + z1 * z1)));
  return {z1, theta};
}

double cusp_angular_fraction(double s, double r) {
  if (r >= std::sqrt(2.0)) return 1.0;
  return std::min(1.0, 4.0 * cusp_geometry(s, r).theta / kPi);
}

double cusp_radius_threshold(double s, double folded) {
  if (folded <= 0.0) return 0.0;
  return std::pow(std::pow(std::sin(folded), s) / std::cos(folded), 1.0 / (1.0 - s));
}

bool cusp_indicator(double s, const Point& z) {
  const double a = std::abs(z[0]);
  const double b = std::abs(z[1]);
  return b > std::pow(a, s) || a > std::pow(b, s);
}

double fold_to_axis(double phi) {
  const double quarter = 0.5 * kPi;
  double psi = std::fmod(phi, quarter);
  if (psi < 0.0) psi += quarter;
  return std::min(psi, quarter - psi);
}

// ---------------------------------------------------------------- masses

QuadResult integrate_power(const MeasureSpec& spec, const Point& x, const SetDescriptor& set, double q) {
  spec.validate();
  validate_set(set, spec.dim);
  if (const auto* ann = std::get_if<Annulus>(&set); ann && ann->outer == ann->inner) return {0.0, 0.0};
  check_diagonal(spec, set, x, q);
  check_tail(spec, set, q);

  if (!absolutely_continuous_2d(spec)) {
    // One-dimensional measures along coordinate rays through x.
    const Point xx{x[0], spec.dim == 2 ? x[1] : 0.0};
    const int rays = 2 * spec.dim;
    const Point dirs[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    double total = 0.0;
    for (int k = 0; k < rays; ++k) {
      const RayIntervals iv = ray_intervals(set, xx, dirs[k], spec.dim);
      for (int j = 0; j < iv.n; ++j) total += line_power_integral(spec, iv.v[j].a, iv.v[j].b, q);
    }
    return {total, 0.0};
  }
  return polar_integral(spec, x, set, q);
}

QuadResult measure_of_set(const MeasureSpec& spec, const Point& x, const SetDescriptor& set) {
  return integrate_power(spec, x, set, 0.0);
}

QuadResult second_moment_in_ball(const MeasureSpec& spec, const Point& x, double rho) {
  require(rho > 0.0, "rho must be positive");
  return integrate_power(spec, x, Ball{x, rho}, 2.0);
}

}  // namespace nllab
