#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adamlab/discrete.hpp"
#include "adamlab/model.hpp"
#include "adamlab/types.hpp"

namespace adamlab {

/// Parse or validation failure; `line()` is 0 when no source line applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class ExperimentKind { simulate, ode, deviation, ergodic, rates, clt, lyapunov_audit };

/// Config spelling ("lyapunov-audit" for the audit).
std::string_view experiment_name(ExperimentKind kind);
/// CLI subcommand ("audit" for the audit).
std::string_view subcommand_name(ExperimentKind kind);
std::optional<ExperimentKind> experiment_from_name(std::string_view name);
const std::vector<ExperimentKind>& all_experiments();

struct ProblemSpec {
  std::string kind;  ///< diag_quadratic | double_well | scalar_power
  Vec diag;
  Vec sigma;
  int power = 2;
  bool deterministic = false;

  ProblemPtr build() const;
};

struct SimulateSpec {
  Vec x0;
  std::size_t n_iters = 1000;
  std::size_t stride = 1;
  double divergence_radius = 1e8;
};

struct OdeSpec {
  Vec x0;
  double t_end = 10.0;
  double dt = 1e-3;
  int substeps = 10;
};

struct DeviationSpec {
  Vec x0;
  double T = 5.0;
  std::vector<double> gammas;
  std::size_t replicas = 20;
};

struct ErgodicSpec {
  Vec x0;
  std::size_t n = 100000;
  double delta = 0.1;
  std::vector<double> gammas;
  std::size_t replicas = 20;
};

struct RatesSpec {
  Vec x0;
  double t_end = 100.0;
  double dt = 1e-2;
  std::string mode = "power";
  std::optional<double> t_lo;
  std::optional<double> t_hi;
  std::optional<Vec> x_star;
};

struct CltSpec {
  Vec x_star;
  std::optional<Vec> x0;
  std::size_t n_stop = 100000;
  std::size_t replicas = 10000;
  double divergence_radius = 1.0;
  bool monte_carlo = true;
};

struct AuditSpec {
  Vec x0;
  double t_end = 100.0;
  double dt = 1e-3;
  std::size_t samples = 1000;
  double slack = 1e-4;
  double tol = 1e-8;
  double delta = 1e-3;
};

using ExperimentSpec =
    std::variant<SimulateSpec, OdeSpec, DeviationSpec, ErgodicSpec, RatesSpec, CltSpec, AuditSpec>;

/// A bound on one reported metric: `<metric>_max` or `<metric>_min`.
struct CheckSpec {
  std::string key;
  std::string metric;
  bool upper = true;
  double bound = 0.0;
};

struct RunConfig {
  std::string source;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::optional<std::string> out;
  ProblemSpec problem;
  Algorithm algorithm;
  ExperimentKind kind = ExperimentKind::simulate;
  ExperimentSpec experiment;
  std::vector<CheckSpec> checks;
};

/// Metric names an experiment reports (and that checks may reference).
const std::vector<std::string>& experiment_metrics(ExperimentKind kind);

/// Parses the key-value/table format (or JSON when the text starts with
/// '{') and validates every field. Unknown keys are errors.
RunConfig parse_config(std::string_view text, std::string_view source_name = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Human-readable resolved plan, used by --dry-run.
std::string describe_plan(const RunConfig& config);

}  // namespace adamlab
