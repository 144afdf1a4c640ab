#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "../src/output.hpp"
#include "nllab/config.hpp"
#include "nllab/error.hpp"
#include "nllab/experiments.hpp"
#include "nllab/measures.hpp"
#include "nllab/regularity.hpp"

using namespace nllab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nllab_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

// CSV column by header name.
std::vector<std::string> column(const std::string& csv, const std::string& name) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> head;
  {
    std::istringstream h(line);
    std::string c;
    while (std::getline(h, c, ',')) head.push_back(c);
  }
  const auto idx = static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
  REQUIRE(idx < head.size());
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    std::istringstream r(line);
    std::string c;
    for (std::size_t i = 0; i <= idx; ++i) std::getline(r, c, ',');
    out.push_back(c);
  }
  return out;
}

const char* kSolveConstant = R"(
measure: {kind: alpha_stable, dim: 1, alpha: 1.5}
grid: {h: 1/16, box_radius: 2, domain_radius: 1}
solver: {t1: 0.5, dt: 1/16}
experiment:
  initial: {kind: constant, value: 3}
  exterior: {kind: constant, value: 3}
  snapshots: [0.25, 0.5]
)";

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.0 / std::acos(-1.0), 1e-300, -123456.789, 0.0, 5e-324}) {
      const auto s = format_number(v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(3.0) == "3");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  }

  TEST_CASE("CSV tables check their width") {
    CsvTable t({"a", "b"});
    t.row() << 1.5 << "x";
    CHECK(t.str() == "a,b\n1.5,x\n");
    CHECK_THROWS_AS((t.row() << 1.0), Error);
    CHECK_THROWS_AS((t.row() << "a,b" << 1.0), Error);
  }

  TEST_CASE("config parsing: fractions, defaults and unknown keys") {
    const auto cfg = parse_config(kSolveConstant);
    CHECK(cfg.measure.kind == MeasureKind::AlphaStable);
    CHECK(*cfg.grid.h == 1.0 / 16);
    CHECK(*cfg.solver.dt == 1.0 / 16);
    CHECK_FALSE(cfg.solver.t0.has_value());
    CHECK(cfg.experiment.initial.value == 3.0);
    CHECK(cfg.experiment.snapshots == std::vector<double>{0.25, 0.5});
    CHECK(code_of([] { parse_config("measure: {kind: axes, dim: 2, alpha: 1}\ngrid: {spacing: 1}\n"); }) ==
          ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config("measure: {kind: axes, dim: 2, alpha: one}\n"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config("grid: {h: 1}\n"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config("measure: [1, 2\n"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { parse_config("measure: {kind: cusp, dim: 2, alpha: 0.5, s: 0.5}\n"); }) == ErrorCode::InvalidInput);
    const auto robust = parse_config("measure: {kind: alpha_stable, dim: 1, alpha: 1.5, normalization: robust}\n");
    CHECK(robust.measure.normalization == robust_normalization(1.5));
    CHECK(code_of([&] { robust.seed("test"); }) == ErrorCode::InvalidConfig);
  }

  TEST_CASE("solve keeps constant data constant and reruns identically") {
    const auto dir = scratch("solve");
    RunOptions opt;
    opt.out_dir = (dir / "a").string();
    const auto a = run_command(Command::Solve, parse_config(kSolveConstant), opt);
    CHECK(a.files == std::vector<std::string>{"solution.csv", "solve.json", "run.json"});
    const auto csv = slurp(dir / "a" / "solution.csv");
    const auto u = column(csv, "u");
    REQUIRE(u.size() == 2 * 65);
    for (const auto& v : u) CHECK(std::abs(std::stod(v) - 3.0) <= 1e-8);

    opt.out_dir = (dir / "b").string();
    run_command(Command::Solve, parse_config(kSolveConstant), opt);
    CHECK(slurp(dir / "b" / "solution.csv") == csv);
    CHECK(slurp(dir / "b" / "solve.json") == slurp(dir / "a" / "solve.json"));

    const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "run.json"));
    CHECK(manifest["command"] == "solve");
    CHECK(manifest["config_fnv1a64"] == hex64(fnv1a64(kSolveConstant)));
    REQUIRE(manifest["files"].size() == 2);
    CHECK(manifest["files"][0]["path"] == "solution.csv");
    CHECK(manifest["files"][0]["fnv1a64"] == hex64(fnv1a64(csv)));
  }

  TEST_CASE("check-conditions for the axes measure") {
    const auto cfg = parse_config(R"(
measure: {kind: axes, dim: 2, alpha: 1}
experiment: {conditions: [k1], rho: [0.25, 1, 4], budget: 8.5}
)");
    RunOptions opt;
    opt.out_dir = scratch("k1").string();
    const auto r = run_command(Command::CheckConditions, cfg, opt);
    for (const auto& v : column(slurp(fs::path(opt.out_dir) / "k1.csv"), "value"))
      CHECK(std::stod(v) == doctest::Approx(8.0).epsilon(1e-10));
    const auto summary = nlohmann::json::parse(r.summary_json);
    CHECK(summary["pass"] == true);

    const auto k2 = parse_config("measure: {kind: axes, dim: 2, alpha: 1}\nexperiment: {conditions: [k2]}\n");
    CHECK(code_of([&] { run_command(Command::CheckConditions, k2, opt); }) == ErrorCode::InvalidConfig);
    const auto bad = parse_config("measure: {kind: axes, dim: 2, alpha: 1}\nexperiment: {conditions: [k4]}\n");
    CHECK(code_of([&] { run_command(Command::CheckConditions, bad, opt); }) == ErrorCode::InvalidConfig);
  }

  TEST_CASE("regularity: constant Harnack sample, scaling identity, unknown name") {
    RunOptions opt;
    opt.out_dir = scratch("harnack").string();
    opt.seed = 3;
    const auto h = run_command(Command::Regularity, parse_config(R"(
measure: {kind: alpha_stable, dim: 1, alpha: 1}
grid: {h: 1/16, box_radius: 4, domain_radius: 2}
solver: {dt: 1/64}
experiment: {name: harnack, samples: 2, constant_sample: true}
)"),
                               opt);
    const auto csv = slurp(fs::path(opt.out_dir) / "harnack.csv");
    const auto q = column(csv, "quotient");
    const auto source = column(csv, "source");
    REQUIRE(source.back() == "constant");
    CHECK(std::stod(q.back()) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(h.summary_file == "harnack.json");

    opt.out_dir = scratch("scaling").string();
    run_command(Command::Regularity, parse_config(R"(
measure: {kind: alpha_stable, dim: 1, alpha: 1}
grid: {h: 1/16}
solver: {dt: 1/32}
experiment: {name: scaling, r: 1, initial: {kind: bump, value: 1, width: 0.5}}
)"),
                opt);
    CHECK(column(slurp(fs::path(opt.out_dir) / "scaling.csv"), "discrepancy").front() == "0");

    const auto unknown = parse_config("measure: {kind: axes, dim: 2, alpha: 1}\nexperiment: {name: sobolev}\n");
    opt.out_dir = scratch("unknown").string();
    CHECK(code_of([&] { run_command(Command::Regularity, unknown, opt); }) == ErrorCode::InvalidConfig);
    CHECK_FALSE(fs::exists(opt.out_dir));
  }

  TEST_CASE("Moser experiment drops inadmissible positive exponents") {
    RunOptions opt;
    opt.out_dir = scratch("moser").string();
    const auto r = run_command(Command::Regularity, parse_config(R"(
measure: {kind: alpha_stable, dim: 1, alpha: 1.5, normalization: robust}
grid: {h: 1/16, box_radius: 4, domain_radius: 2}
solver: {dt: 1/64}
experiment: {name: moser, seed: 11, samples: 2, modes: [positer], exponents: [0.25, 0.5]}
)"),
                               opt);
    const auto p = column(slurp(fs::path(opt.out_dir) / "moser.csv"), "p");
    CHECK_FALSE(p.empty());
    for (const auto& v : p) CHECK(v == "0.25");
    const auto summary = nlohmann::json::parse(r.summary_json);
    CHECK(summary["kappa"].get<double>() == moser_kappa(1, 1.5));
    CHECK(std::isfinite(summary["g2_exponent"].get<double>()));
  }
}
