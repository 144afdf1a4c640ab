#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nllab/geometry.hpp"

namespace nllab {

enum class MeasureKind { AlphaStable, Axes, Cusp, Tabulated };

const char* to_string(MeasureKind kind);
MeasureKind measure_kind_from_string(const std::string& name);

// Radial density k(r) given by a table, interpolated as a power law between rows.
// Outside [r_0, r_n] the density is extended as k ~ r^{-exponent} only if the
// corresponding exponent is set; otherwise any query there is an error.
class RadialTable {
 public:
  RadialTable(std::vector<double> radius, std::vector<double> density,
              std::optional<double> inner_exponent, std::optional<double> outer_exponent);

  // Two whitespace-separated columns (radius, density); '#' starts a comment.
  static RadialTable parse(std::istream& in, std::optional<double> inner_exponent,
                           std::optional<double> outer_exponent);
  static RadialTable load(const std::string& path, std::optional<double> inner_exponent,
                          std::optional<double> outer_exponent);

  double density(double r) const;
  // ∫_a^b k(r) r^p dr; b may be infinite.
  double integrate(double a, double b, double p) const;
  // True if ∫_0^c k(r) r^p dr is finite.
  bool integrable_at_zero(double p) const;
  bool integrable_at_infinity(double p) const;

  const std::vector<double>& radius() const { return radius_; }
  const std::vector<double>& values() const { return density_; }

 private:
  double segment_integral(double k0, double r0, double e, double a, double b, double p) const;

  std::vector<double> radius_;
  std::vector<double> density_;
  std::vector<double> slope_;  // log-log slope of segment j
  std::optional<double> inner_;
  std::optional<double> outer_;
};

struct MeasureSpec {
  MeasureKind kind = MeasureKind::AlphaStable;
  int dim = 1;
  double alpha = 1.0;
  double s = 0.5;               // cusp exponent
  double normalization = 1.0;   // scalar multiplier of the measure
  std::shared_ptr<const RadialTable> table;  // Tabulated only

  // Throws InvalidInput naming the violated invariant.
  void validate() const;

  static MeasureSpec alpha_stable(int dim, double alpha, double normalization = 1.0);
  static MeasureSpec axes(int dim, double alpha, double normalization = 1.0);
  static MeasureSpec cusp(double alpha, double s, double normalization = 1.0);
  static MeasureSpec tabulated(int dim, double alpha, std::shared_ptr<const RadialTable> table,
                               double normalization = 1.0);
};

// Robust normalization multiplier (2 - alpha).
inline double robust_normalization(double alpha) { return 2.0 - alpha; }

// Constant C(d,alpha) for which normalization C(d,alpha) makes the AlphaStable
// operator equal to -(-Laplacian)^{alpha/2}.
double fractional_laplacian_constant(int dim, double alpha);

// Surface area of the unit sphere in R^d: 2 for d = 1, 2*pi for d = 2.
double sphere_area(int dim);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error; 0 for closed forms
};

// ∫_set |x - y|^q mu(x, dy).
QuadResult integrate_power(const MeasureSpec& spec, const Point& x, const SetDescriptor& set, double q);

QuadResult measure_of_set(const MeasureSpec& spec, const Point& x, const SetDescriptor& set);
QuadResult second_moment_in_ball(const MeasureSpec& spec, const Point& x, double rho);

struct CuspGeometry {
  double z1 = 0.0;
  double theta = 0.0;
};

// Positive root z1 of r^2 = z1^2 + z1^{2s}; theta = asin(z1 / sqrt(z1^{2s} + z1^2)).
CuspGeometry cusp_geometry(double s, double r);

// Fraction of the circle of radius r charged by the cusp measure: min(1, 4 theta / pi).
double cusp_angular_fraction(double s, double r);

// Radius beyond which a ray at angle `folded` from its nearest axis enters the cusp
// support; folded in [0, pi/4].
double cusp_radius_threshold(double s, double folded);

// Indicator of the cusp support at displacement z.
bool cusp_indicator(double s, const Point& z);

// Angle of a direction to the nearest coordinate axis, in [0, pi/4].
double fold_to_axis(double phi);

// alpha for AlphaStable/Axes/Tabulated, (1 - 1/s) + alpha for Cusp.
double effective_order(const MeasureSpec& spec);

// Density of an absolutely continuous kind at distance r (includes the normalization;
// for Cusp this is the stable density without the indicator).
double radial_density(const MeasureSpec& spec, double r);

// One-dimensional density used along coordinate lines (d = 1 kinds and Axes).
double line_density(const MeasureSpec& spec, double r);

// ∫_a^b line_density(r) r^p dr, closed form.
double line_power_integral(const MeasureSpec& spec, double a, double b, double p);
// ∫_a^b radial_density(r) r^p dr, closed form.
double radial_power_integral(const MeasureSpec& spec, double a, double b, double p);

}  // namespace nllab
