#pragma once

#include "config.hpp"

#include "levybel/estimator.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace levybel::cli {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kConfigError = 2, kNumericFailure = 3 };

const std::vector<std::string>& experiment_kinds();

// Schema shared by all subcommands.
const Schema& config_schema();

struct RunOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

// Builds the estimator configuration from the [run], [model] and
// [simulation] sections. `t` and `eps_trunc` fall back to the given defaults.
EstimatorConfig build_estimator_config(const ConfigFile& cfg);

struct RunResult {
  int exit_code = kPass;
  std::vector<std::string> artifacts;  // paths written
  std::string summary;                 // also written to <out>/<kind>_summary.txt
};

// Runs one experiment, writing CSV and summary under opts.out_dir. Throws
// ConfigError for configuration problems and levybel::Error for numeric ones;
// `log` receives progress and timing (never part of the artifacts).
RunResult run_experiment(const std::string& kind, ConfigFile cfg, const RunOptions& opts, std::ostream& log);

// Maps exceptions to exit codes and prints the message to `err`.
int run_guarded(const std::string& kind, const std::string& config_path, const RunOptions& opts, std::ostream& out,
                std::ostream& err);

}  // namespace levybel::cli
