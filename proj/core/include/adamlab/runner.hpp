#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "adamlab/config.hpp"

namespace adamlab {

struct CheckResult {
  std::string name;    ///< config key, e.g. sigma1_empirical_rel_err_max
  std::string metric;
  double value = 0.0;
  double bound = 0.0;
  bool upper = true;
  bool passed = false;
};

struct RunResult {
  ExperimentKind kind = ExperimentKind::simulate;
  std::map<std::string, double> metrics;
  std::vector<CheckResult> checks;
  std::vector<std::string> artifacts;  ///< file names relative to the output directory
  std::vector<std::string> notes;
  bool passed = false;
};

/// Rough iteration count of the configured experiment; configs above
/// `max_work()` are rejected before anything runs.
double estimated_work(const RunConfig& config);
constexpr double max_work() { return 5e10; }

/// Runs the experiment, writes its artifacts and summary.json into
/// `out_dir` (created if needed) and evaluates the checks. `log` receives one
/// line per experiment.
RunResult execute(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// Subcommands, bundled configs found in `config_dir`, and artifact schemas.
std::string list_experiments(const std::filesystem::path& config_dir);

/// Column layouts of every CSV artifact.
std::string csv_schemas();

}  // namespace adamlab
