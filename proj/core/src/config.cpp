#include "adamlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "adamlab/csv.hpp"

namespace adamlab {

using json = nlohmann::ordered_json;

ConfigError::ConfigError(const std::string& message, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

// ---------------------------------------------------------------------------
// Key-value/table grammar (a TOML subset):
//
//   document  := { blank | comment | header | keyval }
//   header    := '[' key ']'
//   keyval    := key '=' value
//   key       := [A-Za-z0-9_-]+ | '"' chars '"'
//   value     := string | number | 'true' | 'false' | array | inline
//   array     := '[' [ value { ',' value } [','] ] ']'     (may span lines)
//   inline    := '{' [ keyval { ',' keyval } ] '}'
//
// '#' starts a comment anywhere outside strings.
// ---------------------------------------------------------------------------
class KeyValueParser {
 public:
  explicit KeyValueParser(std::string_view text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    std::string table_path;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        const std::size_t header_line = line_;
        const std::string name = parse_key();
        skip_spaces();
        expect(']');
        finish_line();
        if (root.contains(name)) fail("duplicate table [" + name + "]", header_line);
        root[name] = json::object();
        table = &root[name];
        table_path = "/" + name;
        lines_[table_path] = header_line;
        continue;
      }
      parse_keyval(*table, table_path);
      finish_line();
    }
    return root;
  }

  const std::map<std::string, std::size_t>& lines() const { return lines_; }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t line = 0) const {
    throw ConfigError(msg, line ? line : line_);
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#')
      while (!at_end() && peek() != '\n') ++pos_;
  }

  // Skips whitespace, comments and newlines.
  void skip_all() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }

  void skip_blank_lines() { skip_all(); }

  void finish_line() {
    skip_spaces();
    skip_comment();
    if (at_end()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "' after value");
    ++pos_;
    ++line_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'" + (at_end() ? " before end of input" : ""));
    ++pos_;
  }

  std::string parse_key() {
    if (peek() == '"') return parse_string();
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  void parse_keyval(json& table, const std::string& path) {
    const std::size_t key_line = line_;
    const std::string key = parse_key();
    skip_spaces();
    expect('=');
    skip_spaces();
    if (table.contains(key)) fail("duplicate key '" + key + "'", key_line);
    const std::string child = path + "/" + key;
    lines_[child] = key_line;
    table[key] = parse_value(child);
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json parse_number() {
    const std::size_t start = pos_;
    if (peek() == '+' || peek() == '-') ++pos_;
    bool is_float = false;
    while (!at_end()) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        ++pos_;
        if ((c == 'e' || c == 'E') && (peek() == '+' || peek() == '-')) ++pos_;
      } else {
        break;
      }
    }
    const std::string token(s_.substr(start, pos_ - start));
    if (token.empty() || token == "+" || token == "-") fail("expected a value");
    try {
      std::size_t used = 0;
      if (!is_float) {
        const long long v = std::stoll(token, &used);
        if (used == token.size()) return json(v);
      } else {
        const double v = std::stod(token, &used);
        if (used == token.size()) return json(v);
      }
    } catch (const std::exception&) {
    }
    fail("malformed number '" + token + "'");
  }

  json parse_value(const std::string& path) {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') {
      ++pos_;
      json arr = json::array();
      skip_all();
      while (peek() != ']') {
        arr.push_back(parse_value(path + "/" + std::to_string(arr.size())));
        skip_all();
        if (peek() == ',') {
          ++pos_;
          skip_all();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      return arr;
    }
    if (c == '{') {
      ++pos_;
      json obj = json::object();
      skip_spaces();
      while (peek() != '}') {
        parse_keyval(obj, path);
        skip_spaces();
        if (peek() == ',') {
          ++pos_;
          skip_spaces();
        } else if (peek() != '}') {
          fail("expected ',' or '}' in inline table");
        }
      }
      ++pos_;
      return obj;
    }
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t> lines_;
};

// Typed, consuming view of one JSON object; remembers which keys were read so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string path, const std::map<std::string, std::size_t>& lines)
      : obj_(obj), path_(std::move(path)), lines_(lines) {
    if (!obj_.is_object()) fail_here("'" + display() + "' must be a table");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number()) fail(key, "must be a number");
    return v->get<double>();
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = number(key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) fail(key, "must be finite and > 0");
    return v;
  }

  std::uint64_t count(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                      std::uint64_t min = 1) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_number_integer() || v->get<long long>() < static_cast<long long>(min))
      fail(key, "must be an integer >= " + std::to_string(min));
    return static_cast<std::uint64_t>(v->get<long long>());
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = fetch(key, true);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(key, "must be true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    if (!v) return *fallback;
    if (!v->is_string()) fail(key, "must be a string");
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, bool required = true) {
    const json* v = fetch(key, !required);
    if (!v) return {};
    if (!v->is_array() || v->empty()) fail(key, "must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) fail(key, "must be a non-empty array of numbers");
      const double x = e.get<double>();
      if (!std::isfinite(x)) fail(key, "entries must be finite");
      out.push_back(x);
    }
    return out;
  }

  Vec vector(const std::string& key) {
    const auto xs = numbers(key);
    return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }

  std::optional<Vec> optional_vector(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return vector(key);
  }

  Section table(const std::string& key) {
    const json* v = fetch(key, false);
    return Section(*v, path_ + "/" + key, lines_);
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (auto it = obj_.begin(); it != obj_.end(); ++it) out.push_back(it.key());
    return out;
  }

  void mark(const std::string& key) { used_.insert(key); }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + qualified(it.key()) + "'", line_of(it.key()));
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("'" + qualified(key) + "' " + msg, line_of(key));
  }

  [[noreturn]] void fail_here(const std::string& msg) const {
    auto it = lines_.find(path_);
    throw ConfigError(msg, it == lines_.end() ? 0 : it->second);
  }

  std::string qualified(const std::string& key) const {
    const std::string d = display();
    return d.empty() ? key : d + "." + key;
  }

 private:
  const json* fetch(const std::string& key, bool optional) {
    used_.insert(key);
    if (!obj_.contains(key)) {
      if (optional) return nullptr;
      fail_here("missing required key '" + qualified(key) + "'");
    }
    return &obj_.at(key);
  }

  std::string display() const {
    std::string d = path_;
    if (!d.empty() && d.front() == '/') d.erase(0, 1);
    std::replace(d.begin(), d.end(), '/', '.');
    return d;
  }

  std::size_t line_of(const std::string& key) const {
    auto it = lines_.find(path_ + "/" + key);
    if (it != lines_.end()) return it->second;
    it = lines_.find(path_);
    return it == lines_.end() ? 0 : it->second;
  }

  const json& obj_;
  std::string path_;
  const std::map<std::string, std::size_t>& lines_;
  std::set<std::string> used_;
};

ProblemSpec read_problem(Section sec) {
  ProblemSpec p;
  p.kind = sec.text("kind");
  p.deterministic = sec.boolean("deterministic", false);
  if (p.kind == "diag_quadratic") {
    p.diag = sec.vector("diag");
    p.sigma = sec.has("sigma") ? sec.vector("sigma") : Vec::Ones(p.diag.size());
  } else if (p.kind == "double_well") {
    p.sigma = sec.vector("sigma");
  } else if (p.kind == "scalar_power") {
    p.power = static_cast<int>(sec.count("p", 2, 2));
    p.sigma = sec.has("sigma") ? sec.vector("sigma") : Vec::Ones(1);
  } else {
    sec.fail("kind", "must be one of diag_quadratic, double_well, scalar_power");
  }
  sec.reject_unknown();
  try {
    (void)p.build();
  } catch (const std::invalid_argument& e) {
    sec.fail_here(std::string("invalid problem: ") + e.what());
  }
  return p;
}

Algorithm read_algorithm(Section sec) {
  const std::string kind = sec.text("kind", "constant");
  const double eps = sec.positive("eps", 1.0);
  Algorithm out;
  if (kind == "constant") {
    ConstantHyper h;
    h.gamma = sec.positive("gamma", 1e-3);
    h.eps = eps;
    const bool regime = sec.has("a") || sec.has("b");
    if (regime && (sec.has("alpha") || sec.has("beta")))
      sec.fail("a", "cannot be combined with alpha/beta; give either (alpha, beta) or (a, b)");
    if (regime) {
      const double a = sec.positive("a");
      const double b = sec.positive("b");
      h.alpha = 1.0 - a * h.gamma;
      h.beta = 1.0 - b * h.gamma;
    } else {
      h.alpha = sec.number("alpha", 0.9);
      h.beta = sec.number("beta", 0.999);
    }
    try {
      h.validate();
    } catch (const std::invalid_argument& e) {
      sec.fail_here(std::string("invalid constant hyperparameters: ") + e.what());
    }
    out = h;
  } else if (kind == "decreasing") {
    Schedule s;
    s.gamma0 = sec.positive("gamma0", 0.5);
    s.kappa = sec.positive("kappa", 0.7);
    s.a = sec.positive("a", 1.0);
    s.b = sec.positive("b", 1.0);
    s.eps = eps;
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      sec.fail_here(std::string("invalid schedule: ") + e.what());
    }
    out = s;
  } else {
    sec.fail("kind", "must be 'constant' or 'decreasing'");
  }
  sec.reject_unknown();
  return out;
}

void require_dim(Section& sec, const std::string& key, const Vec& v, std::size_t dim) {
  if (static_cast<std::size_t>(v.size()) != dim)
    sec.fail(key, "has dimension " + std::to_string(v.size()) + ", problem has " + std::to_string(dim));
}

// The sweep keeps (a, b, eps) of the configured algorithm fixed and maps
// each gamma back to (alpha, beta), which must stay in [0, 1).
std::vector<double> read_gammas(Section& sec, const ConstantHyper& base) {
  auto gammas = sec.numbers("gammas");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) sec.fail("gammas", "entries must be > 0");
    if (i > 0 && !(gammas[i] < gammas[i - 1])) sec.fail("gammas", "must be strictly decreasing");
    try {
      ConstantHyper::from_regime(gammas[i], base.a(), base.b(), base.eps).validate();
    } catch (const std::invalid_argument& e) {
      sec.fail("gammas", "entry " + fmt::format("{}", gammas[i]) + " is invalid for a=" + fmt::format("{}", base.a()) +
                             ", b=" + fmt::format("{}", base.b()) + ": " + e.what());
    }
  }
  return gammas;
}

ExperimentSpec read_experiment(Section sec, ExperimentKind kind, std::size_t dim, const Algorithm& algorithm) {
  sec.mark("kind");
  const auto x0 = [&] {
    Vec v = sec.vector("x0");
    require_dim(sec, "x0", v, dim);
    return v;
  };
  const bool constant = std::holds_alternative<ConstantHyper>(algorithm);
  ExperimentSpec out;
  switch (kind) {
    case ExperimentKind::simulate: {
      SimulateSpec s;
      s.x0 = x0();
      s.n_iters = sec.count("n_iters", 1000);
      s.stride = sec.count("stride", 1);
      s.divergence_radius = sec.positive("divergence_radius", 1e8);
      out = s;
      break;
    }
    case ExperimentKind::ode: {
      OdeSpec s;
      s.x0 = x0();
      s.t_end = sec.positive("t_end", 10.0);
      s.dt = sec.positive("dt", 1e-3);
      s.substeps = static_cast<int>(sec.count("substeps", 10, 0));
      out = s;
      break;
    }
    case ExperimentKind::deviation: {
      if (!constant) sec.fail_here("deviation experiment requires a constant-stepsize algorithm");
      DeviationSpec s;
      s.x0 = x0();
      s.T = sec.positive("T", 5.0);
      s.gammas = read_gammas(sec, std::get<ConstantHyper>(algorithm));
      s.replicas = sec.count("replicas", 20);
      out = s;
      break;
    }
    case ExperimentKind::ergodic: {
      if (!constant) sec.fail_here("ergodic experiment requires a constant-stepsize algorithm");
      ErgodicSpec s;
      s.x0 = x0();
      s.n = sec.count("n", 100000);
      s.delta = sec.positive("delta", 0.1);
      s.gammas = read_gammas(sec, std::get<ConstantHyper>(algorithm));
      s.replicas = sec.count("replicas", 20);
      out = s;
      break;
    }
    case ExperimentKind::rates: {
      RatesSpec s;
      s.x0 = x0();
      s.t_end = sec.positive("t_end", 100.0);
      s.dt = sec.positive("dt", 1e-2);
      s.mode = sec.text("mode", "power");
      if (s.mode != "power" && s.mode != "exponential") sec.fail("mode", "must be 'power' or 'exponential'");
      if (sec.has("window")) {
        const auto w = sec.numbers("window");
        if (w.size() != 2 || !(w[0] > 0.0) || !(w[0] < w[1]) || w[1] > s.t_end)
          sec.fail("window", "must be [t_lo, t_hi] with 0 < t_lo < t_hi <= t_end");
        s.t_lo = w[0];
        s.t_hi = w[1];
      }
      s.x_star = sec.optional_vector("x_star");
      if (s.x_star) require_dim(sec, "x_star", *s.x_star, dim);
      out = s;
      break;
    }
    case ExperimentKind::clt: {
      if (constant) sec.fail_here("clt experiment requires a decreasing-stepsize algorithm");
      CltSpec s;
      s.x_star = sec.vector("x_star");
      require_dim(sec, "x_star", s.x_star, dim);
      s.x0 = sec.optional_vector("x0");
      if (s.x0) require_dim(sec, "x0", *s.x0, dim);
      s.n_stop = sec.count("n_stop", 100000);
      s.replicas = sec.count("replicas", 10000);
      s.divergence_radius = sec.positive("divergence_radius", 1.0);
      s.monte_carlo = sec.boolean("monte_carlo", true);
      if (s.monte_carlo && s.replicas < 100) sec.fail("replicas", "must be >= 100 for the Monte Carlo estimate");
      out = s;
      break;
    }
    case ExperimentKind::lyapunov_audit: {
      AuditSpec s;
      s.x0 = x0();
      s.t_end = sec.positive("t_end", 100.0);
      s.dt = sec.positive("dt", 1e-3);
      s.samples = sec.count("samples", 1000);
      s.slack = sec.number("slack", 1e-4);
      s.tol = sec.number("tol", 1e-8);
      s.delta = sec.number("delta", 1e-3);
      if (s.slack < 0.0 || s.tol < 0.0 || s.delta < 0.0) sec.fail_here("slack, tol and delta must be >= 0");
      out = s;
      break;
    }
  }
  sec.reject_unknown();
  return out;
}

std::vector<CheckSpec> read_checks(Section sec, ExperimentKind kind) {
  const auto& metrics = experiment_metrics(kind);
  std::vector<CheckSpec> checks;
  for (const std::string& key : sec.keys()) {
    CheckSpec c;
    c.key = key;
    const auto ends_with = [&](std::string_view suffix) {
      return key.size() > suffix.size() && key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with("_max")) {
      c.upper = true;
    } else if (ends_with("_min")) {
      c.upper = false;
    } else {
      sec.fail(key, "check names must end in _max or _min");
    }
    c.metric = key.substr(0, key.size() - 4);
    if (std::find(metrics.begin(), metrics.end(), c.metric) == metrics.end())
      sec.fail(key, "refers to unknown metric '" + c.metric + "' for experiment '" +
                        std::string(experiment_name(kind)) + "'");
    c.bound = sec.number(key);
    checks.push_back(c);
  }
  return checks;
}

}  // namespace

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::ode: return "ode";
    case ExperimentKind::deviation: return "deviation";
    case ExperimentKind::ergodic: return "ergodic";
    case ExperimentKind::rates: return "rates";
    case ExperimentKind::clt: return "clt";
    case ExperimentKind::lyapunov_audit: return "lyapunov-audit";
  }
  return "?";
}

std::string_view subcommand_name(ExperimentKind kind) {
  return kind == ExperimentKind::lyapunov_audit ? "audit" : experiment_name(kind);
}

std::optional<ExperimentKind> experiment_from_name(std::string_view name) {
  for (ExperimentKind k : all_experiments())
    if (experiment_name(k) == name || subcommand_name(k) == name) return k;
  return std::nullopt;
}

const std::vector<ExperimentKind>& all_experiments() {
  static const std::vector<ExperimentKind> kinds{ExperimentKind::simulate, ExperimentKind::ode,
                                                 ExperimentKind::deviation, ExperimentKind::ergodic,
                                                 ExperimentKind::rates,    ExperimentKind::clt,
                                                 ExperimentKind::lyapunov_audit};
  return kinds;
}

const std::vector<std::string>& experiment_metrics(ExperimentKind kind) {
  static const std::map<ExperimentKind, std::vector<std::string>> table{
      {ExperimentKind::simulate, {"final_F", "final_dist_to_critical", "max_cost_increase"}},
      {ExperimentKind::ode,
       {"max_cost_increase", "V_max_violation", "final_dist_to_equilibria", "min_v", "max_clamp"}},
      {ExperimentKind::deviation, {"median_first", "median_last", "medians_strictly_decreasing"}},
      {ExperimentKind::ergodic, {"frequency_first", "frequency_last", "frequency_non_increasing", "diverged"}},
      {ExperimentKind::rates, {"slope", "predicted", "slope_error", "r_squared", "residual"}},
      {ExperimentKind::clt,
       {"L", "zeta", "lyapunov_residual", "block_consistency", "spectral_residual", "sigma1_empirical_rel_err",
        "retention_rate", "mean_max_abs_z"}},
      {ExperimentKind::lyapunov_audit,
       {"V_max_violation", "dissipation_max_excess", "W_max_violation", "max_cost_increase"}},
  };
  return table.at(kind);
}

ProblemPtr ProblemSpec::build() const {
  const GaussianNoiseSpec noise{sigma, deterministic};
  if (kind == "diag_quadratic") return make_diag_quadratic(diag, noise);
  if (kind == "double_well") return make_double_well(noise);
  if (kind == "scalar_power") return make_scalar_power(power, noise);
  throw std::invalid_argument("unknown problem kind '" + kind + "'");
}

RunConfig parse_config(std::string_view text, std::string_view source_name) {
  json doc;
  std::map<std::string, std::size_t> lines;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
  } else {
    KeyValueParser parser(text);
    doc = parser.parse();
    lines = parser.lines();
  }

  RunConfig cfg;
  cfg.source = std::string(source_name);
  Section root(doc, "", lines);
  cfg.seed = root.count("seed", 1, 0);
  cfg.threads = static_cast<unsigned>(root.count("threads", 0, 0));
  if (root.has("out")) cfg.out = root.text("out");

  cfg.problem = read_problem(root.table("problem"));
  const std::size_t dim = static_cast<std::size_t>(cfg.problem.sigma.size());
  cfg.algorithm = root.has("algorithm") ? read_algorithm(root.table("algorithm"))
                                        : read_algorithm(Section(json::object(), "/algorithm", lines));

  Section exp = root.table("experiment");
  const std::string kind_name = exp.text("kind");
  const auto kind = experiment_from_name(kind_name);
  if (!kind) {
    std::string names;
    for (ExperimentKind k : all_experiments()) names += (names.empty() ? "" : ", ") + std::string(experiment_name(k));
    exp.fail("kind", "must be one of " + names);
  }
  cfg.kind = *kind;
  cfg.experiment = read_experiment(exp, cfg.kind, dim, cfg.algorithm);
  if (const auto* h = std::get_if<ConstantHyper>(&cfg.algorithm); h && cfg.kind != ExperimentKind::simulate &&
                                                                 !h->ode_regime_ok()) {
    const std::string msg = fmt::format("regime mismatch: b = {} exceeds 4a = {}", h->b(), 4.0 * h->a());
    if (root.has("algorithm")) root.table("algorithm").fail_here(msg);
    exp.fail_here(msg);
  }
  if (root.has("checks")) cfg.checks = read_checks(root.table("checks"), cfg.kind);
  root.reject_unknown();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

namespace {

std::string show(double v) { return fmt::format("{}", v); }

std::string vec_text(const Vec& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + show(v(i));
  return s + "]";
}

std::string list_text(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + show(v[i]);
  return s + "]";
}

}  // namespace

std::string describe_plan(const RunConfig& cfg) {
  std::ostringstream out;
  out << "config: " << cfg.source << '\n';
  out << "experiment: " << experiment_name(cfg.kind) << '\n';
  out << "seed: " << cfg.seed << '\n';
  out << "problem: " << cfg.problem.kind << " dim=" << cfg.problem.sigma.size();
  if (cfg.problem.kind == "diag_quadratic") out << " diag=" << vec_text(cfg.problem.diag);
  if (cfg.problem.kind == "scalar_power") out << " p=" << cfg.problem.power;
  out << " sigma=" << vec_text(cfg.problem.sigma) << (cfg.problem.deterministic ? " (deterministic)" : "") << '\n';
  if (const auto* h = std::get_if<ConstantHyper>(&cfg.algorithm)) {
    out << "algorithm: constant gamma=" << show(h->gamma) << " alpha=" << show(h->alpha)
        << " beta=" << show(h->beta) << " eps=" << show(h->eps) << " (a=" << show(h->a())
        << ", b=" << show(h->b()) << ")\n";
  } else {
    const auto& s = std::get<Schedule>(cfg.algorithm);
    out << "algorithm: decreasing gamma0=" << show(s.gamma0) << " kappa=" << show(s.kappa)
        << " a=" << show(s.a) << " b=" << show(s.b) << " eps=" << show(s.eps) << '\n';
  }
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, SimulateSpec>) {
          out << "plan: x0=" << vec_text(e.x0) << " n_iters=" << e.n_iters << " stride=" << e.stride << '\n';
        } else if constexpr (std::is_same_v<T, OdeSpec>) {
          out << "plan: x0=" << vec_text(e.x0) << " t_end=" << show(e.t_end) << " dt=" << show(e.dt)
              << " substeps=" << e.substeps << '\n';
        } else if constexpr (std::is_same_v<T, DeviationSpec>) {
          out << "plan: x0=" << vec_text(e.x0) << " T=" << show(e.T) << " gammas=" << list_text(e.gammas)
              << " replicas=" << e.replicas << '\n';
        } else if constexpr (std::is_same_v<T, ErgodicSpec>) {
          out << "plan: x0=" << vec_text(e.x0) << " n=" << e.n << " delta=" << show(e.delta)
              << " gammas=" << list_text(e.gammas) << " replicas=" << e.replicas << '\n';
        } else if constexpr (std::is_same_v<T, RatesSpec>) {
          out << "plan: x0=" << vec_text(e.x0) << " t_end=" << show(e.t_end) << " dt=" << show(e.dt)
              << " mode=" << e.mode << '\n';
        } else if constexpr (std::is_same_v<T, CltSpec>) {
          out << "plan: x_star=" << vec_text(e.x_star) << " n_stop=" << e.n_stop << " replicas=" << e.replicas
              << " monte_carlo=" << (e.monte_carlo ? "yes" : "no") << '\n';
        } else if constexpr (std::is_same_v<T, AuditSpec>) {
          out << "plan: x0=" << vec_text(e.x0) << " t_end=" << show(e.t_end) << " dt=" << show(e.dt)
              << " samples=" << e.samples << " delta=" << show(e.delta) << '\n';
        }
      },
      cfg.experiment);
  for (const auto& c : cfg.checks)
    out << "check: " << c.metric << (c.upper ? " <= " : " >= ") << show(c.bound) << '\n';
  return out.str();
}

}  // namespace adamlab
