// Command-line front end. Links only the C interface of the library.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "nllab/nllab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitNumerical = 3;

int exit_code(nllab_status s) {
  switch (s) {
    case NLLAB_OK: return kExitOk;
    case NLLAB_ERR_INVALID_INPUT:
    case NLLAB_ERR_INVALID_CONFIG:
    case NLLAB_ERR_IO: return kExitInvalidConfig;
    case NLLAB_ERR_NUMERICAL: return kExitNumerical;
    case NLLAB_ERR_INTERNAL: break;
  }
  return kExitOther;
}

int report(nllab_status s, const char* stage) {
  std::fprintf(stderr, "nllab: %s failed (%s): %s\n", stage, nllab_status_name(s), nllab_last_error());
  return exit_code(s);
}

int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
        const std::optional<std::uint64_t>& seed, int threads) {
  nllab_config* cfg = nullptr;
  nllab_status s = nllab_config_load(config_path.c_str(), &cfg);
  if (s != NLLAB_OK) return report(s, "reading the config");
  if (seed) nllab_config_set_seed(cfg, *seed);

  nllab_result* res = nullptr;
  s = nllab_run(cfg, command.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), threads, &res);
  nllab_config_free(cfg);
  if (s != NLLAB_OK) return report(s, command.c_str());

  std::fputs(nllab_result_summary(res), stdout);
  std::fprintf(stderr, "nllab: wrote %zu files to %s\n", nllab_result_file_count(res), nllab_result_dir(res));
  nllab_result_free(res);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for nonlocal parabolic equations"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  app.add_option("--out", out_dir, "Output directory (overrides output.dir of the config)");
  app.add_option("--seed", seed, "Seed for randomized steps (overrides experiment.seed)");
  app.add_option("--threads", threads, "Worker threads for batch loops (0 keeps the default)")->check(CLI::NonNegativeNumber);

  std::string config_path;
  std::string command;
  for (const char* name : {"check-conditions", "solve", "regularity"}) {
    const char* help = std::string(name) == "solve"              ? "Solve the configured initial value problem"
                       : std::string(name) == "check-conditions" ? "Measure the kernel conditions K1, K2 and K3"
                                                                 : "Run the regularity experiment named in the config";
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "YAML configuration file")->required()->check(CLI::ExistingFile);
    sub->callback([&command, name] { command = name; });
  }
  bool want_version = false;
  app.add_subcommand("version", "Print the library version")->callback([&want_version] { want_version = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }
  if (want_version) {
    std::printf("nllab %s\n", nllab_version());
    return kExitOk;
  }
  return run(command, config_path, out_dir, seed, threads);
}
