#include <doctest.h>

#include <filesystem>

#include "adamlab/config.hpp"

using namespace adamlab;

namespace {

const char* kOde = R"(# comment line
seed = 12   # trailing comment
[problem]
kind = "diag_quadratic"
diag = [1.0, 2.0]
sigma = [
  0.5,   # multi-line array
  0.5,
]

[algorithm]
kind = "constant"
gamma = 1e-3
a = 10
b = 1
eps = 1.0

[experiment]
kind = "ode"
x0 = [1, -1]
t_end = 5.0

[checks]
V_max_violation_max = 1e-8
min_v_min = 0.0
)";

std::size_t error_line(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  FAIL("expected a ConfigError");
  return 0;
}

}  // namespace

TEST_CASE("full key-value config") {
  const RunConfig cfg = parse_config(kOde);
  CHECK(cfg.seed == 12);
  CHECK(cfg.kind == ExperimentKind::ode);
  CHECK(cfg.problem.kind == "diag_quadratic");
  CHECK(cfg.problem.sigma.size() == 2);
  const auto& h = std::get<ConstantHyper>(cfg.algorithm);
  CHECK(h.a() == doctest::Approx(10.0));
  CHECK(h.alpha == doctest::Approx(0.99));
  const auto& e = std::get<OdeSpec>(cfg.experiment);
  CHECK(e.t_end == 5.0);
  CHECK(e.dt == 1e-3);
  REQUIRE(cfg.checks.size() == 2);
  CHECK(cfg.checks[0].metric == "V_max_violation");
  CHECK(cfg.checks[0].upper);
  CHECK(cfg.checks[1].metric == "min_v");
  CHECK_FALSE(cfg.checks[1].upper);
}

TEST_CASE("JSON encoding of the same schema") {
  const RunConfig a = parse_config(kOde);
  const RunConfig b = parse_config(R"({"seed": 12,
    "problem": {"kind": "diag_quadratic", "diag": [1.0, 2.0], "sigma": [0.5, 0.5]},
    "algorithm": {"kind": "constant", "gamma": 1e-3, "a": 10, "b": 1, "eps": 1.0},
    "experiment": {"kind": "ode", "x0": [1, -1], "t_end": 5.0},
    "checks": {"V_max_violation_max": 1e-8, "min_v_min": 0.0}})");
  CHECK(describe_plan(a) == describe_plan(b));
}

TEST_CASE("defaults follow the usual Adam constants") {
  const RunConfig cfg = parse_config(R"(
[problem]
kind = "scalar_power"
[experiment]
kind = "simulate"
x0 = [0.5]
)");
  const auto& h = std::get<ConstantHyper>(cfg.algorithm);
  CHECK(h.gamma == 1e-3);
  CHECK(h.alpha == 0.9);
  CHECK(h.beta == 0.999);
}

TEST_CASE("errors carry the offending line") {
  CHECK(error_line("seed = 1\nseed = 2\n") == 2);
  CHECK(error_line("seed = 1\n[problem]\nkind = \"diag_quadratic\"\ndiag = [1.0]\nbogus = 1\n"
                   "[experiment]\nkind = \"ode\"\nx0 = [1]\n") == 5);
  CHECK(error_line("[problem]\nkind = \"oops\"\n") == 2);
  CHECK(error_line("seed = \"unterminated\n") == 1);
  CHECK(error_line("\n\nseed = 1.2.3\n") == 3);
  CHECK(error_line("seed = 1 extra\n") == 1);
  CHECK(error_line("[problem]\n[problem]\n") == 2);
  CHECK(error_line("x = [1, 2\n") >= 1);
}

TEST_CASE("semantic validation") {
  const std::string base = "[problem]\nkind = \"diag_quadratic\"\ndiag = [1.0]\n";
  // dimension mismatch
  CHECK_THROWS_AS(parse_config(base + "[experiment]\nkind = \"ode\"\nx0 = [1, 2]\n"), ConfigError);
  // decreasing-only experiment with a constant algorithm
  CHECK_THROWS_AS(parse_config(base + "[experiment]\nkind = \"clt\"\nx_star = [0]\n"), ConfigError);
  // gammas must decrease
  CHECK_THROWS_AS(parse_config(base + "[algorithm]\na = 1\nb = 1\n[experiment]\nkind = \"deviation\"\nx0 = [1]\n"
                                      "gammas = [0.01, 0.02]\n"),
                  ConfigError);
  // gamma too large for the fixed a
  CHECK_THROWS_AS(parse_config(base + "[algorithm]\na = 50\nb = 1\n[experiment]\nkind = \"ergodic\"\nx0 = [1]\n"
                                      "gammas = [0.1]\n"),
                  ConfigError);
  // a/b and alpha/beta together
  CHECK_THROWS_AS(parse_config(base + "[algorithm]\na = 1\nb = 1\nalpha = 0.9\n[experiment]\nkind = \"ode\"\nx0 = [1]\n"),
                  ConfigError);
  // unknown metric in checks
  CHECK_THROWS_AS(parse_config(base + "[experiment]\nkind = \"ode\"\nx0 = [1]\n[checks]\nfoo_max = 1\n"), ConfigError);
  // check without a direction
  CHECK_THROWS_AS(parse_config(base + "[experiment]\nkind = \"ode\"\nx0 = [1]\n[checks]\nmin_v = 1\n"), ConfigError);
  // unknown experiment kind
  CHECK_THROWS_AS(parse_config(base + "[experiment]\nkind = \"plot\"\n"), ConfigError);
  // b > 4a is only allowed when no ODE comparison is involved
  const std::string steep = "[algorithm]\ngamma = 0.001\na = 1\nb = 5\n";
  CHECK(error_line(base + steep + "[experiment]\nkind = \"ode\"\nx0 = [1]\n") == 4);
  CHECK_NOTHROW(parse_config(base + steep + "[experiment]\nkind = \"simulate\"\nx0 = [1]\n"));
}

TEST_CASE("experiment names") {
  CHECK(all_experiments().size() == 7);
  CHECK(experiment_name(ExperimentKind::lyapunov_audit) == "lyapunov-audit");
  CHECK(subcommand_name(ExperimentKind::lyapunov_audit) == "audit");
  CHECK(experiment_from_name("audit") == ExperimentKind::lyapunov_audit);
  CHECK(experiment_from_name("lyapunov-audit") == ExperimentKind::lyapunov_audit);
  CHECK_FALSE(experiment_from_name("nope").has_value());
}

TEST_CASE("every bundled config validates") {
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ADAMLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW((void)load_config(entry.path()));
    ++n;
  }
  CHECK(n >= 7);
}
