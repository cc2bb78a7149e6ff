// adamlab: config-driven experiments for Adam and its continuous-time limit.
//
//   adamlab list
//   adamlab <simulate|ode|deviation|ergodic|rates|clt|audit|run> --config FILE
//           [--seed N] [--out DIR] [--threads N] [--dry-run]
//
// Exit status: 0 all checks passed, 1 a check failed, 2 bad usage or config,
// 3 the computation itself failed (divergence, singular system, I/O).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adamlab/config.hpp"
#include "adamlab/runner.hpp"
#include "adamlab/types.hpp"

namespace {

enum Exit { kPass = 0, kChecksFailed = 1, kConfigError = 2, kRuntimeError = 3 };

std::filesystem::path config_dir() {
  if (const char* env = std::getenv("ADAMLAB_CONFIGS")) return env;
  return ADAMLAB_CONFIG_DIR;
}

std::filesystem::path output_dir(const std::optional<std::string>& flag, const adamlab::RunConfig& cfg) {
  if (flag) return *flag;
  if (cfg.out) return *cfg.out;
  if (const char* env = std::getenv("ADAMLAB_OUT"); env && *env) return env;
  return "adamlab_out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adamlab: Adam, its ODE limit, and the decreasing-step CLT, driven by config files"};
  app.footer("\n" + adamlab::csv_schemas());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  bool dry_run = false;
  app.add_option("--config", config_path, "experiment config (key-value tables or JSON)");
  app.add_option("--seed", seed, "root seed, overrides the config");
  app.add_option("--out", out, "output directory (default: config 'out', then $ADAMLAB_OUT, then ./adamlab_out)");
  app.add_option("--threads", threads, "worker threads, 0 = all cores; results do not depend on it");
  app.add_flag("--dry-run", dry_run, "validate and print the resolved plan without computing");

  auto* list = app.add_subcommand("list", "list experiments, bundled configs and artifact schemas");
  auto* any = app.add_subcommand("run", "run whichever experiment the config declares");
  std::vector<std::pair<CLI::App*, adamlab::ExperimentKind>> subs;
  for (adamlab::ExperimentKind k : adamlab::all_experiments()) {
    const std::string name(adamlab::subcommand_name(k));
    subs.emplace_back(app.add_subcommand(name, "run a '" + std::string(adamlab::experiment_name(k)) + "' config"), k);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  if (list->parsed()) {
    std::cout << adamlab::list_experiments(config_dir());
    return kPass;
  }
  if (config_path.empty()) {
    std::cerr << "adamlab: --config is required\n";
    return kConfigError;
  }

  adamlab::RunConfig cfg;
  try {
    cfg = adamlab::load_config(config_path);
    for (const auto& [sub, kind] : subs) {
      if (sub->parsed() && kind != cfg.kind)
        throw adamlab::ConfigError("subcommand '" + sub->get_name() + "' does not match experiment kind '" +
                                   std::string(adamlab::experiment_name(cfg.kind)) + "' in " + config_path);
    }
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    const double work = adamlab::estimated_work(cfg);
    if (work > adamlab::max_work())
      throw adamlab::ConfigError("budget overrun: the config requests more work than the runner accepts");
  } catch (const adamlab::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return kConfigError;
  }
  (void)any;

  const auto dir = output_dir(out, cfg);
  if (dry_run) {
    std::cout << adamlab::describe_plan(cfg) << "output: " << dir.string() << '\n';
    return kPass;
  }

  try {
    const auto result = adamlab::execute(cfg, dir, &std::cerr);
    for (const auto& c : result.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.metric << " = " << c.value << (c.upper ? " <= " : " >= ")
                << c.bound << '\n';
    }
    return result.passed ? kPass : kChecksFailed;
  } catch (const adamlab::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const adamlab::DivergenceError& e) {
    std::cerr << "adamlab: diverged: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "adamlab: " << e.what() << '\n';
    return kRuntimeError;
  }
}
