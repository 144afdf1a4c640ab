#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nllab/config.hpp"

namespace nllab {

enum class Command { CheckConditions, Solve, Regularity };
const char* to_string(Command command);
Command command_from_string(const std::string& name);  // "check-conditions", "solve", "regularity"

// Names accepted in experiment.name by the regularity command.
const std::vector<std::string>& regularity_experiments();

const char* version_string();

struct RunOptions {
  std::string out_dir;                 // empty uses output.dir of the config
  std::optional<std::uint64_t> seed;   // overrides experiment.seed
  int threads = 0;                     // 0 leaves the OpenMP default
};

struct RunResult {
  std::string out_dir;
  std::string summary_file;            // JSON summary of the experiment, relative to out_dir
  std::string summary_json;            // its content
  std::vector<std::string> files;      // every file written, the manifest run.json last
};

// Runs one command and writes its CSV and JSON files plus run.json into the output
// directory. Throws Error (InvalidConfig / InvalidInput / NumericalFailure / Io).
RunResult run_command(Command command, ExperimentConfig config, const RunOptions& options = {});

}  // namespace nllab
