#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nllab/measures.hpp"

namespace nllab {

// Unset fields take the defaults of the command that runs.
struct GridConfig {
  std::optional<double> h;
  std::optional<double> box_radius;
  std::optional<double> domain_radius;
};

struct SolverConfig {
  std::optional<double> t0;  // each command has its own default interval
  std::optional<double> t1;
  std::optional<double> dt;
  double theta = 1.0;
  double tolerance = 1e-10;
};

// Initial or exterior data by name. Kinds:
//   constant      value
//   hat           unit discrete mass at the origin (initial data only)
//   bump          value * (1 - |x - center|^2 / width^2)_+^3
//   random_sign   +-value on cells of size width, seeded
//   linear        value + slope * x_1
struct DataConfig {
  std::string kind = "constant";
  double value = 0.0;
  double width = 0.5;
  double slope = 0.0;
  Point center{};
};

// Every experiment-specific setting; each command reads the ones it needs.
struct ExperimentParams {
  std::string name;                 // regularity experiment; ignored by the other commands
  std::optional<std::uint64_t> seed;
  int samples = 50;

  // check-conditions
  std::vector<std::string> conditions{"k1", "k2", "k3"};
  std::vector<double> rho{0.25, 0.5, 1.0, 2.0};
  std::vector<double> dh{1.0 / 16, 1.0 / 32};
  double ball_radius = 1.0;
  double budget = 100.0;            // Lambda
  double delta = 0.5;
  int random_functions = 0;         // K2: 0 uses the default suite

  // solve
  DataConfig initial;
  DataConfig exterior;
  std::vector<double> snapshots;    // output times; empty means the final time only

  // harnack
  bool constant_sample = false;
  bool refine = false;              // also run with h / 2 and report the drift

  // hoelder
  double t_lo = 0.25;
  double t_hi = 1.0;
  double radius = 0.5;
  std::size_t max_points = 3000;

  // scaling
  double r = 0.5;
  Point xi{};
  double tau = 0.0;
  int refinements = 1;

  // moser
  std::vector<std::string> modes{"negstep", "negiter", "positer"};
  std::vector<double> exponents{0.25, 0.5, 1.0};
  std::vector<std::pair<double, double>> radii{{0.5, 1.0}, {0.5, 0.75}, {0.75, 1.0}, {0.5, 0.625}, {0.875, 1.0}};
  double epsilon = 1e-3;

  // heatkernel
  std::vector<double> times{0.25, 0.5, 1.0};
  bool doubled_box = false;

  // strongharnack
  std::vector<double> concentrations{0.5, 1.0, 2.0};
  bool symmetrize = false;
};

struct ExperimentConfig {
  MeasureSpec measure;
  GridConfig grid;
  SolverConfig solver;
  ExperimentParams experiment;
  std::string output_dir = "out";
  std::string source_path;   // empty when parsed from text
  std::string source_text;   // exact bytes, hashed into the manifest

  // Seed for randomized steps; throws InvalidConfig if none was given.
  std::uint64_t seed(const char* what) const;
};

// Parses YAML text. Relative table paths resolve against base_dir. Throws Error with
// code InvalidConfig naming the offending key, or InvalidInput for a violated invariant.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

}  // namespace nllab
