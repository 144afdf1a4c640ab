#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nllab/solver.hpp"

namespace nllab {

// ---------------------------------------------------------------------------------------
// Weak Harnack quotient ‖u‖_{L¹(U-)} / (inf_{U+} u + ‖f‖_{L∞(Q)}), Q = (-1, 1) x B_2(0).

struct HarnackValue {
  double quotient = 0.0;
  double l1_lower = 0.0;    // ‖u‖_{L¹(U-)} with exact cell and time-interval weights
  double inf_upper = 0.0;   // minimum over grid points in the closure of U+
  double f_sup = 0.0;       // max |f| over grid points of Q
  bool degenerate = false;  // denominator is zero; quotient is left at 0
};

HarnackValue harnack_quotient(const SpaceTimeFunction& u, const SourceTerm& f, double alpha);

struct HarnackReport {
  int dim = 1;
  double alpha = 1.0;
  double h = 0.0;
  double dt = 0.0;
  std::vector<HarnackValue> samples;
  double max_quotient = 0.0;
  std::size_t degenerate_count = 0;
};

HarnackReport harnack_batch(const std::vector<SpaceTimeFunction>& samples, const SourceTerm& f, double alpha);

// Relative change |b - a| / a of a batch maximum between two grids.
double refinement_drift(double coarse, double fine);

// ---------------------------------------------------------------------------------------
// Hölder fit on a cylinder Q'.

enum class HolderMethod {
  Modulus,   // modulus of continuity: largest difference over pairs no farther apart than each bin edge
  Pairwise,  // least squares of log|u(t,x) - u(s,y)| on log distance over all pairs with a nonzero difference
  Envelope,  // least squares through the largest difference in each logarithmic distance bin
};

struct HolderOptions {
  HolderMethod method = HolderMethod::Modulus;
  double min_distance_in_h = 2.0;     // window starts at this many grid spacings
  double min_distance = 0.0;          // unless this absolute distance is larger
  double max_distance_fraction = 0.25;  // and ends at this fraction of the parabolic diameter of Q'
  int bins = 12;
  std::size_t max_points = 3000;      // larger point sets are subsampled
  std::uint64_t seed = 1;
};

struct HolderReport {
  bool constant = false;    // no oscillation at all: seminorm 0, no fit
  double beta = 0.0;        // slope of log(max oscillation) against log(distance)
  double seminorm = 0.0;    // exp(intercept): oscillation ≈ seminorm * d^beta
  double eta = 0.0;         // (sup_norm / seminorm)^(1/beta)
  double fit_residual = 0.0;  // RMS residual of the fit in log space
  double sup_norm = 0.0;    // max |u| over all levels and box nodes
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points = 0;
  std::size_t pairs = 0;
  std::vector<double> bin_distance;     // largest distance of the pairs in each used bin
  std::vector<double> bin_oscillation;  // largest |u(t,x) - u(s,y)| in that bin
};

// Distances are |x - y| + |t - s|^(1/alpha) over grid points of the closed cylinder.
HolderReport holder_fit(const SpaceTimeFunction& u, const Cylinder& q_prime, double alpha,
                        const HolderOptions& options = {});

// ---------------------------------------------------------------------------------------
// Scaling: u on Q_r(xi, tau) pulled back to the unit cylinder versus a direct unit solve.

struct ScalingParams {
  double r = 1.0;
  Point xi{};
  double tau = 0.0;
};

struct ScalingProblem {
  MeasureSpec spec;
  double h = 1.0 / 32;          // spacing of both grids
  double dt = 1.0 / 64;         // step of the unit problem on (-1, 1)
  double theta = 1.0;
  double unit_domain = 2.0;     // the unit problem lives on B_{unit_domain}(0)
  double unit_box = 8.0;
  std::function<double(const Point&)> u0;  // original coordinates, at time tau - r^alpha
  ExteriorData g = ExteriorData::zero();    // original coordinates
  SourceTerm f;                             // original coordinates
  double tolerance = 1e-12;
  int reference_factor = 4;     // scheme error against (h, dt) / factor; 0 skips it
};

struct ScalingReport {
  double discrepancy = 0.0;     // max |u~ - u~_direct| on unit grid points of [-1, 1] x B_1 that J maps to grid points
  double epsilon_scheme = 0.0;  // max |u_h - u_{h/factor}| of the original problem at the same points
  std::size_t compared = 0;
  double original_h = 0.0;
  double original_dt = 0.0;
  double original_box = 0.0;
};

ScalingReport scaling_check(const ScalingProblem& problem, const ScalingParams& params);

// Largest relative difference between the assembled weights and tail masses on a grid of
// spacing h and r^alpha times those on the image grid of spacing r h.
double scaled_assembly_mismatch(const MeasureSpec& spec, double h, double r, int cells = 8);

// ---------------------------------------------------------------------------------------
// Weighted Poincaré ratio with Psi(x) = (3/2 - |x|) ∧ 1 over grid points of B_{3/2}(0).

struct PoincareReport {
  double ratio = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double weighted_mean = 0.0;
  bool degenerate = false;
};

// v holds values on every box node. Ordered pairs enter the double sum.
PoincareReport weighted_poincare_ratio(const DiscreteOperator& op, std::span<const double> v);

// ---------------------------------------------------------------------------------------
// Level sets of log u~ with u~ = u + ‖f‖_{L∞(Q)} + epsilon.

struct LogLevelOptions {
  std::vector<double> s_values;  // empty picks 2^(k/2), k = -4..8
  double epsilon = 1e-3;
};

struct LogLevelReport {
  double a = 0.0;             // minus the Psi-weighted mean of log u~ over B_{3/2} at t = 0
  double shift = 0.0;         // ‖f‖ + epsilon
  std::vector<double> s;
  std::vector<double> lower_measure;  // |Q+(1) ∩ {log u~ < -s - a}|
  std::vector<double> upper_measure;  // |Q-(1) ∩ {log u~ > s - a}|
  double sup_lower_product = 0.0;     // sup_s s * lower_measure
  double sup_upper_product = 0.0;
};

LogLevelReport log_level_sets(const SpaceTimeFunction& u, const SourceTerm& f, double alpha,
                              const LogLevelOptions& options = {});

// ---------------------------------------------------------------------------------------
// Moser inequalities for u~ = u + ‖f‖_{L∞(Q)} + epsilon.

enum class MoserMode { NegStep, NegIter, PosIter };
const char* to_string(MoserMode mode);
MoserMode moser_mode_from_string(const std::string& name);

struct MoserOptions {
  double epsilon = 1e-3;
  double g2_exponent = 0.0;  // omega in G2 = (R - r)^omega; see fit_g2_exponent
};

struct MoserReport {
  MoserMode mode = MoserMode::NegStep;
  int dim = 1;
  double alpha = 1.0;
  double p = 0.0;
  double kappa = 0.0;
  double r = 0.0;
  double R = 0.0;
  double shift = 0.0;
  // NegStep: lhs = (∫_{Q-(r)} u~^{-kappa p})^{1/kappa}, rhs = ∫_{Q-(R)} u~^{-p}.
  // NegIter: lhs = sup_{Q-(r)} u~^{-1},                  rhs = (∫_{Q-(R)} u~^{-p})^{1/p}.
  // PosIter: lhs = ∫_{Q+(r)} u~,                          rhs = (∫_{Q+(R)} u~^p)^{1/p}.
  double lhs = 0.0;
  double rhs = 0.0;
  double a_prime = 0.0;  // (p + 1)^2 ((R - r)^{-alpha} + (R^alpha - r^alpha)^{-1})
  double g1 = 0.0;
  double g2 = 0.0;
  // Ratio that the inequality bounds by a constant:
  //   NegStep: lhs / (A' rhs)
  //   NegIter: G1 (lhs / rhs)^p
  //   PosIter: |Q+(1)| G2 (lhs / rhs)^{1 / (1/p - 1)}
  double implied_constant = 0.0;
  // PosIter only: (lhs / rhs)^{1 / (1/p - 1)}, the part that does not involve G2.
  double pos_core = 0.0;
};

double moser_kappa(int dim, double alpha);
double moser_g1(int dim, double alpha, double r, double R);

MoserReport moser_check(const SpaceTimeFunction& u, const SourceTerm& f, double alpha, MoserMode mode, double p,
                        double r, double R, const MoserOptions& options = {});

// Fits omega in pos_core ≈ c_sample (R - r)^{-omega} across radius pairs, pooling samples
// with a separate intercept for each; reports[sample][pair] must all be PosIter.
double fit_g2_exponent(const std::vector<std::vector<MoserReport>>& reports);
// Recomputes g2 and implied_constant of a PosIter report for a given omega.
void apply_g2_exponent(MoserReport& report, double omega);

// ---------------------------------------------------------------------------------------
// Heat kernel of the fractional Laplacian from hat initial data.

struct HeatKernelOptions {
  double box = 8.0;
  double h = 1.0 / 64;
  double dt = 1.0 / 256;
  double theta = 1.0;
  double far_factor = 4.0;      // far field starts at far_factor * t^(1/alpha)
  double tolerance = 1e-10;
  bool doubled_box_mass = false;  // rerun with twice the box to measure the mass change
};

struct HeatKernelReport {
  std::vector<double> t;
  std::vector<double> center;          // u(t, 0)
  std::vector<double> scaled_center;   // u(t, 0) t^{d/alpha}
  std::vector<double> far_min;         // min and max of u(t,x) / (t |x|^{-d-alpha}) over the far field
  std::vector<double> far_max;
  std::vector<int> far_points;
  std::vector<bool> truncated;         // no far-field point inside half the box
  std::vector<double> mass;            // Σ u(t) h^d
  std::vector<double> mass_doubled;    // same with the doubled box, if requested
};

// Uses the fractional-Laplacian normalization of the given AlphaStable spec as is.
HeatKernelReport heat_kernel_profile(const MeasureSpec& spec, const std::vector<double>& t_list,
                                     const HeatKernelOptions& options = {});

// ---------------------------------------------------------------------------------------
// Stationary states driven by exterior mass near one axis point.

struct StrongHarnackOptions {
  double box = 3.0;
  double h = 3.0 / 16;
  double domain = 2.0;
  double offset = 2.625;       // the mass sits at (offset, 0)
  double dt = 50.0;
  double change_tol = 1e-10;
  std::size_t max_steps = 400;
  bool symmetrize = false;     // replace the data by its average over circles |x| = const
};

struct StrongHarnackReport {
  std::vector<double> concentration;  // transverse width of the mass is h / concentration
  std::vector<double> ratio;          // sup / inf of the stationary state over grid points of B_{1/2}
  std::vector<double> sup;
  std::vector<double> inf;
  std::vector<double> relative_change;
  bool converged = true;
};

StrongHarnackReport strong_harnack_probe(const MeasureSpec& spec, const std::vector<double>& concentration,
                                         const StrongHarnackOptions& options = {});

// ---------------------------------------------------------------------------------------
// f = L(u^-) for u >= 0 on B_3(0): bounded on B_1 by C0 times a weighted sup of u^- beyond B_3.

struct LuMinusReport {
  double f_max = 0.0;          // max |L u^-| over unknowns in B_1
  double weighted_sup = 0.0;   // sup of u^-(y) / (|y| - 1)^delta over evaluation points with |y| >= 3
  double c0 = 0.0;             // measured constant of the far-tail condition
  double bound = 0.0;          // c0 * weighted_sup
  bool within = false;
};

LuMinusReport lu_minus_check(const DiscreteOperator& op, const std::function<double(const Point&)>& u, double delta);

}  // namespace nllab
