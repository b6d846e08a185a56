#pragma once

// Configuration, orchestration, and reporting for the command-line driver.
//
// A run is described by a RunConfig (parsed from a strict JSON config file or
// assembled from command-line flags), executed by run(), and recorded as a
// schema-versioned JSON report plus, for full analyses, a per-point CSV table.
// Reports are byte-identical across runs with the same config, seed, and tool
// version, except for the trailing "timings" object.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "laglab/errors.hpp"
#include "laglab/field.hpp"
#include "laglab/gallery.hpp"
#include "laglab/jets.hpp"
#include "laglab/matrixineq.hpp"

namespace laglab {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "laglab";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchemaVersion = "1.0";

enum class Command { analyze, gap_check, lili, lili_search };
enum class Engine { exact, fd };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::analyze: return "analyze";
    case Command::gap_check: return "gap-check";
    case Command::lili: return "lili";
    case Command::lili_search: return "lili-search";
  }
  return "?";
}

inline std::string to_string(Engine e) {
  return e == Engine::exact ? "exact" : "fd";
}

// Fully resolved description of one run.  Geometric commands use `example`,
// `resolution`, and `engine`; matrix commands use `p`/`dim`/`trials`/`iters`.
// `checks` empty means "use the default set for this command and example".
struct RunConfig {
  Command command = Command::analyze;

  std::optional<ExampleSpec> example;
  int resolution = 48;
  Engine engine = Engine::exact;
  std::optional<std::string> expect_verdict;  // gap-check only

  int p = 0;
  int dim = 0;
  int trials = 10000;
  int iters = 2000;
  std::uint64_t seed = 1;
  double scale = 1.0;

  std::vector<std::string> checks;            // empty -> defaults
  std::map<std::string, double> tolerances;   // overrides by check name

  std::string out_dir;                 // empty -> $LAGLAB_OUT_DIR or "."
  std::string report_file = "report.json";
  std::string points_file = "points.csv";
};

namespace detail {

// ---------------------------------------------------------------------------
// check catalog

enum : unsigned {
  kCmdAnalyze = 1u << 0,
  kCmdGapCheck = 1u << 1,
  kCmdLili = 1u << 2,
  kCmdLiliSearch = 1u << 3,
};

inline unsigned command_bit(Command c) {
  switch (c) {
    case Command::analyze: return kCmdAnalyze;
    case Command::gap_check: return kCmdGapCheck;
    case Command::lili: return kCmdLili;
    case Command::lili_search: return kCmdLiliSearch;
  }
  return 0;
}

struct CheckDef {
  const char* name;
  double tol_exact;
  double tol_fd;
  // Tolerances guarding identities (as opposed to classification margins)
  // may be tightened by a config override but never loosened.
  bool tighten_only;
  unsigned commands;
  // Entries that are tolerance knobs rather than pass/fail checks cannot be
  // listed under "checks".
  bool checkable;
};

inline const std::vector<CheckDef>& check_catalog() {
  static const std::vector<CheckDef> defs = {
      {"lagrangian-defect", 1e-8, 1e-5, false, kCmdAnalyze | kCmdGapCheck, true},
      {"h-symmetry", 1e-8, 1e-5, false, kCmdAnalyze | kCmdGapCheck, true},
      {"mean-curvature-relation", 1e-8, 1e-4, true, kCmdAnalyze | kCmdGapCheck,
       true},
      {"gauss-equation", 1e-6, 1e-6, true, kCmdAnalyze, true},
      {"maslov-conformal", 1e-5, 1e-5, false, kCmdAnalyze, true},
      {"maslov-equivalence", 1e-5, 1e-5, true, kCmdAnalyze, true},
      {"codazzi-h", 1e-4, 1e-4, false, kCmdAnalyze, true},
      {"codazzi-b", 1e-4, 1e-4, false, kCmdAnalyze, true},
      {"simons-margin", 1e-5, 1e-5, false, kCmdAnalyze, true},
      {"closed-form-match", 1e-8, 1e-4, false, kCmdAnalyze | kCmdGapCheck,
       true},
      {"threshold-agreement", 1e-12, 1e-12, true, kCmdAnalyze | kCmdGapCheck,
       true},
      {"gap-classification", 1e-8, 1e-5, false, kCmdAnalyze | kCmdGapCheck,
       false},
      {"expected-verdict", 0.0, 0.0, false, kCmdGapCheck, true},
      {"trial-gap-floor", 1e-12, 1e-12, true, kCmdLili, true},
      {"search-gap-floor", 1e-12, 1e-12, true, kCmdLiliSearch, true},
  };
  return defs;
}

inline const CheckDef* find_check(const std::string& name) {
  for (const CheckDef& d : check_catalog())
    if (name == d.name) return &d;
  return nullptr;
}

// ---------------------------------------------------------------------------
// strict-mode key handling

inline int edit_distance(const std::string& a, const std::string& b) {
  const std::size_t na = a.size(), nb = b.size();
  std::vector<int> row(nb + 1);
  for (std::size_t j = 0; j <= nb; ++j) row[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= na; ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= nb; ++j) {
      const int subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, subst});
    }
  }
  return row[nb];
}

inline std::string nearest_key(const std::string& key,
                               const std::vector<std::string>& known) {
  std::string best;
  int best_d = 3;  // only suggest close matches
  for (const std::string& k : known) {
    const int d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

[[noreturn]] inline void reject_key(const std::string& key,
                                    const std::string& where,
                                    const std::vector<std::string>& known) {
  std::string msg = "unknown " + where + " key \"" + key + "\"";
  const std::string hint = nearest_key(key, known);
  if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
  throw ConfigError(msg);
}

// ---------------------------------------------------------------------------
// typed JSON field readers (errors name the offending field)

inline double read_number(const ordered_json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("config field \"" + key + "\" must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x))
    throw ConfigError("config field \"" + key + "\" must be finite");
  return x;
}

inline int read_int(const ordered_json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw ConfigError("config field \"" + key + "\" must be an integer");
  return v.get<int>();
}

inline std::uint64_t read_seed(const ordered_json& v, const std::string& key) {
  if (!v.is_number_integer() ||
      (!v.is_number_unsigned() && v.get<long long>() < 0))
    throw ConfigError("config field \"" + key +
                      "\" must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::string read_string(const ordered_json& v, const std::string& key) {
  if (!v.is_string())
    throw ConfigError("config field \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline bool read_bool(const ordered_json& v, const std::string& key) {
  if (!v.is_boolean())
    throw ConfigError("config field \"" + key + "\" must be a boolean");
  return v.get<bool>();
}

inline std::vector<double> read_number_array(const ordered_json& v,
                                             const std::string& key) {
  if (!v.is_array())
    throw ConfigError("config field \"" + key + "\" must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(read_number(e, key));
  return out;
}

// ---------------------------------------------------------------------------
// example selection

// Raw selector bundle shared by the config file and the flag parser; only
// make_example applies the per-example strictness rules.
struct ExampleParams {
  std::string name;
  std::optional<int> n;
  std::optional<double> r;
  std::optional<double> theta;
  std::optional<double> c;
  std::optional<std::vector<double>> radii;
  std::optional<std::vector<double>> center;
};

[[noreturn]] inline void reject_selector(const std::string& example,
                                         const std::string& field) {
  throw ConfigError("example \"" + example + "\" does not use field \"" +
                    field + "\"");
}

inline void require_unused(const ExampleParams& p,
                           std::initializer_list<const char*> unused) {
  for (const char* f : unused) {
    const std::string field = f;
    const bool set = (field == "n" && p.n) || (field == "r" && p.r) ||
                     (field == "theta" && p.theta) || (field == "c" && p.c) ||
                     (field == "radii" && p.radii) ||
                     (field == "center" && p.center);
    if (set) reject_selector(p.name, field);
  }
}

inline BaseSpec make_base_example(const ExampleParams& p) {
  if (p.name == "flat-torus") {
    require_unused(p, {"n", "r", "theta", "c", "center"});
    if (!p.radii)
      throw ConfigError("example \"flat-torus\" requires field \"radii\"");
    if (p.radii->empty())
      throw ConfigError("config field \"radii\" must not be empty");
    for (double r : *p.radii)
      if (!(r > 0.0) || !std::isfinite(r))
        throw ConfigError("config field \"radii\" must contain positive numbers");
    return FlatTorus{*p.radii};
  }
  if (p.name == "flat-plane") {
    require_unused(p, {"r", "theta", "c", "radii", "center"});
    if (!p.n) throw ConfigError("example \"flat-plane\" requires field \"n\"");
    if (*p.n < 1) throw ConfigError("config field \"n\" must be at least 1");
    return FlatPlane{*p.n};
  }
  if (p.name == "whitney-cn") {
    require_unused(p, {"theta", "c", "radii"});
    if (!p.n) throw ConfigError("example \"whitney-cn\" requires field \"n\"");
    if (*p.n < 1) throw ConfigError("config field \"n\" must be at least 1");
    WhitneyCn w;
    w.n = *p.n;
    w.r = p.r.value_or(1.0);
    if (!(w.r > 0.0) || !std::isfinite(w.r))
      throw ConfigError("config field \"r\" must be positive");
    if (p.center) {
      if (static_cast<int>(p.center->size()) != 2 * w.n)
        throw ConfigError("config field \"center\" must have 2n entries");
      w.A = *p.center;
    }
    return w;
  }
  if (p.name == "whitney-cpn") {
    require_unused(p, {"r", "radii", "center"});
    if (!p.n) throw ConfigError("example \"whitney-cpn\" requires field \"n\"");
    if (*p.n < 1) throw ConfigError("config field \"n\" must be at least 1");
    if (!p.theta)
      throw ConfigError("example \"whitney-cpn\" requires field \"theta\"");
    WhitneyCpn w;
    w.n = *p.n;
    w.theta = *p.theta;
    w.c = p.c.value_or(1.0);
    if (!(w.c > 0.0) || !std::isfinite(w.c))
      throw ConfigError("config field \"c\" must be positive");
    return w;
  }
  std::string msg = "unknown example \"" + p.name + "\"";
  const std::string hint = nearest_key(
      p.name, {"flat-torus", "flat-plane", "whitney-cn", "whitney-cpn"});
  if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
  throw ConfigError(msg);
}

inline ExampleParams read_example_params(const ordered_json& obj,
                                         const std::string& where,
                                         const std::vector<std::string>& known) {
  ExampleParams p;
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      reject_key(key, where, known);
    if (key == "example")
      p.name = read_string(value, key);
    else if (key == "n")
      p.n = read_int(value, key);
    else if (key == "r")
      p.r = read_number(value, key);
    else if (key == "theta")
      p.theta = read_number(value, key);
    else if (key == "c")
      p.c = read_number(value, key);
    else if (key == "radii")
      p.radii = read_number_array(value, key);
    else if (key == "center")
      p.center = read_number_array(value, key);
  }
  return p;
}

// ---------------------------------------------------------------------------
// tolerances

inline double default_tolerance(const CheckDef& def, Engine engine) {
  return engine == Engine::exact ? def.tol_exact : def.tol_fd;
}

inline double resolved_tolerance(const RunConfig& cfg, const std::string& name) {
  const CheckDef* def = find_check(name);
  const double fallback = def ? default_tolerance(*def, cfg.engine) : 0.0;
  auto it = cfg.tolerances.find(name);
  return it == cfg.tolerances.end() ? fallback : it->second;
}

inline void validate_tolerances(const RunConfig& cfg) {
  for (const auto& [name, value] : cfg.tolerances) {
    const CheckDef* def = find_check(name);
    if (!def) {
      std::vector<std::string> known;
      for (const CheckDef& d : check_catalog()) known.emplace_back(d.name);
      reject_key(name, "tolerances", known);
    }
    if (!(value > 0.0) || !std::isfinite(value))
      throw ConfigError("tolerance for \"" + name + "\" must be positive");
    if (name == "expected-verdict")
      throw ConfigError("check \"expected-verdict\" takes no tolerance");
    const double dflt = default_tolerance(*def, cfg.engine);
    if (def->tighten_only && value > dflt) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "tolerance for \"%s\" may only be tightened (default %g, "
                    "requested %g)",
                    name.c_str(), dflt, value);
      throw ConfigError(buf);
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// config validation and parsing

// Checks everything about a RunConfig that does not require running the
// pipeline: command applicability of checks, tolerance rules, ranges.
inline void validate_config(const RunConfig& cfg) {
  const unsigned bit = detail::command_bit(cfg.command);
  const bool geometric =
      cfg.command == Command::analyze || cfg.command == Command::gap_check;

  if (geometric) {
    if (!cfg.example)
      throw ConfigError("command \"" + to_string(cfg.command) +
                        "\" requires an example");
    if (cfg.resolution < 8)
      throw ConfigError("config field \"resolution\" must be at least 8");
  } else {
    if (cfg.p < 2) throw ConfigError("config field \"p\" must be at least 2");
    if (cfg.dim < 1)
      throw ConfigError("config field \"dim\" must be at least 1");
    if (cfg.command == Command::lili && cfg.trials < 1)
      throw ConfigError("config field \"trials\" must be at least 1");
    if (cfg.command == Command::lili_search && cfg.iters < 1)
      throw ConfigError("config field \"iters\" must be at least 1");
    if (!(cfg.scale > 0.0) || !std::isfinite(cfg.scale))
      throw ConfigError("config field \"scale\" must be positive");
  }

  if (cfg.expect_verdict) {
    if (cfg.command != Command::gap_check)
      throw ConfigError(
          "config field \"expect_verdict\" is only valid for gap-check");
    const std::string& v = *cfg.expect_verdict;
    if (v != "whitney-consistent" && v != "gap-violated" &&
        v != "minimal-excluded")
      throw ConfigError(
          "config field \"expect_verdict\" must be one of "
          "whitney-consistent, gap-violated, minimal-excluded");
  }

  for (const std::string& name : cfg.checks) {
    const detail::CheckDef* def = detail::find_check(name);
    if (!def || !def->checkable) {
      std::vector<std::string> known;
      for (const detail::CheckDef& d : detail::check_catalog())
        if (d.checkable) known.emplace_back(d.name);
      detail::reject_key(name, "checks", known);
    }
    if (!(def->commands & bit))
      throw ConfigError("check \"" + name + "\" is not available for command \"" +
                        to_string(cfg.command) + "\"");
    if (name == "expected-verdict" && !cfg.expect_verdict)
      throw ConfigError(
          "check \"expected-verdict\" requires config field \"expect_verdict\"");
  }

  detail::validate_tolerances(cfg);
}

// Parses and validates a strict JSON run configuration.  Unknown keys are
// rejected with a nearest-match suggestion; malformed JSON reports the line
// and column of the first error.
inline RunConfig parse_config(const std::string& text) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    byte = std::min(byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config parse error at line " + std::to_string(line) +
                      ", column " + std::to_string(col));
  }
  if (!root.is_object())
    throw ConfigError("config root must be a JSON object");
  if (!root.contains("command"))
    throw ConfigError("config requires field \"command\"");

  RunConfig cfg;
  const std::string cmd = detail::read_string(root.at("command"), "command");
  if (cmd == "analyze")
    cfg.command = Command::analyze;
  else if (cmd == "gap-check")
    cfg.command = Command::gap_check;
  else if (cmd == "lili")
    cfg.command = Command::lili;
  else if (cmd == "lili-search")
    cfg.command = Command::lili_search;
  else {
    std::string msg = "unknown command \"" + cmd + "\"";
    const std::string hint = detail::nearest_key(
        cmd, {"analyze", "gap-check", "lili", "lili-search"});
    if (!hint.empty()) msg += "; did you mean \"" + hint + "\"?";
    throw ConfigError(msg);
  }

  const bool geometric =
      cfg.command == Command::analyze || cfg.command == Command::gap_check;

  std::vector<std::string> known = {"command",     "checks",      "tolerances",
                                    "out",         "report_file", "seed"};
  if (geometric) {
    for (const char* k :
         {"example", "n", "r", "theta", "c", "radii", "center", "base",
          "amplitude", "lagrangian_preserving", "resolution", "engine",
          "points_file"})
      known.emplace_back(k);
    if (cfg.command == Command::gap_check) known.emplace_back("expect_verdict");
  } else {
    for (const char* k : {"p", "dim"}) known.emplace_back(k);
    if (cfg.command == Command::lili) {
      known.emplace_back("trials");
      known.emplace_back("scale");
    } else {
      known.emplace_back("iters");
    }
  }

  for (const auto& [key, value] : root.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      detail::reject_key(key, "config", known);

  if (geometric) {
    const std::vector<std::string> selector_keys = {
        "example", "n", "r", "theta", "c", "radii", "center"};
    if (!root.contains("example"))
      throw ConfigError("command \"" + cmd + "\" requires field \"example\"");
    detail::ExampleParams p;
    p.name = detail::read_string(root.at("example"), "example");
    if (root.contains("n")) p.n = detail::read_int(root.at("n"), "n");
    if (root.contains("r")) p.r = detail::read_number(root.at("r"), "r");
    if (root.contains("theta"))
      p.theta = detail::read_number(root.at("theta"), "theta");
    if (root.contains("c")) p.c = detail::read_number(root.at("c"), "c");
    if (root.contains("radii"))
      p.radii = detail::read_number_array(root.at("radii"), "radii");
    if (root.contains("center"))
      p.center = detail::read_number_array(root.at("center"), "center");

    if (p.name == "perturbed") {
      if (!root.contains("base") || !root.at("base").is_object())
        throw ConfigError(
            "example \"perturbed\" requires an object field \"base\"");
      if (!root.contains("amplitude"))
        throw ConfigError("example \"perturbed\" requires field \"amplitude\"");
      for (const char* f : {"n", "r", "theta", "c", "radii", "center"})
        if (root.contains(f)) detail::reject_selector("perturbed", f);
      Perturbed pert;
      pert.base = detail::make_base_example(detail::read_example_params(
          root.at("base"), "base", selector_keys));
      pert.amplitude =
          detail::read_number(root.at("amplitude"), "amplitude");
      if (pert.amplitude < 0.0)
        throw ConfigError("config field \"amplitude\" must be non-negative");
      if (root.contains("seed"))
        pert.seed = detail::read_seed(root.at("seed"), "seed");
      if (root.contains("lagrangian_preserving"))
        pert.lagrangian_preserving = detail::read_bool(
            root.at("lagrangian_preserving"), "lagrangian_preserving");
      cfg.example = ExampleSpec(pert);
    } else {
      for (const char* f : {"base", "amplitude", "lagrangian_preserving"})
        if (root.contains(f)) detail::reject_selector(p.name, f);
      cfg.example = ExampleSpec(std::visit(
          [](auto&& s) { return ExampleSpec(s); }, detail::make_base_example(p)));
      if (root.contains("seed"))
        cfg.seed = detail::read_seed(root.at("seed"), "seed");
    }

    if (root.contains("resolution"))
      cfg.resolution = detail::read_int(root.at("resolution"), "resolution");
    if (root.contains("engine")) {
      const std::string e = detail::read_string(root.at("engine"), "engine");
      if (e == "exact")
        cfg.engine = Engine::exact;
      else if (e == "fd")
        cfg.engine = Engine::fd;
      else
        throw ConfigError("config field \"engine\" must be \"exact\" or \"fd\"");
    }
    if (root.contains("expect_verdict"))
      cfg.expect_verdict =
          detail::read_string(root.at("expect_verdict"), "expect_verdict");
    if (root.contains("points_file"))
      cfg.points_file =
          detail::read_string(root.at("points_file"), "points_file");
  } else {
    if (!root.contains("p") || !root.contains("dim"))
      throw ConfigError("command \"" + cmd +
                        "\" requires fields \"p\" and \"dim\"");
    cfg.p = detail::read_int(root.at("p"), "p");
    cfg.dim = detail::read_int(root.at("dim"), "dim");
    if (root.contains("trials"))
      cfg.trials = detail::read_int(root.at("trials"), "trials");
    if (root.contains("iters"))
      cfg.iters = detail::read_int(root.at("iters"), "iters");
    if (root.contains("seed"))
      cfg.seed = detail::read_seed(root.at("seed"), "seed");
    if (root.contains("scale"))
      cfg.scale = detail::read_number(root.at("scale"), "scale");
  }

  if (root.contains("checks")) {
    if (!root.at("checks").is_array())
      throw ConfigError("config field \"checks\" must be an array of strings");
    for (const auto& e : root.at("checks"))
      cfg.checks.push_back(detail::read_string(e, "checks"));
  }
  if (root.contains("tolerances")) {
    if (!root.at("tolerances").is_object())
      throw ConfigError("config field \"tolerances\" must be an object");
    for (const auto& [key, value] : root.at("tolerances").items())
      cfg.tolerances[key] = detail::read_number(value, "tolerances." + key);
  }
  if (root.contains("out"))
    cfg.out_dir = detail::read_string(root.at("out"), "out");
  if (root.contains("report_file"))
    cfg.report_file = detail::read_string(root.at("report_file"), "report_file");

  validate_config(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// run

struct RunArtifacts {
  int exit_code = 0;
  std::string status;  // "pass" | "check-failure" | "error"
  std::filesystem::path report_path;
  std::filesystem::path points_path;  // empty when no table was written
  ordered_json report;
};

namespace detail {

struct CheckResult {
  std::string name;
  ordered_json measured;
  std::optional<double> tolerance;
  bool pass = false;
};

inline ordered_json example_echo(const ExampleSpec& spec) {
  ordered_json j;
  std::visit(
      [&j](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FlatTorus>) {
          j["example"] = "flat-torus";
          j["radii"] = s.radii;
        } else if constexpr (std::is_same_v<S, FlatPlane>) {
          j["example"] = "flat-plane";
          j["n"] = s.n;
        } else if constexpr (std::is_same_v<S, WhitneyCn>) {
          j["example"] = "whitney-cn";
          j["n"] = s.n;
          j["r"] = s.r;
          if (!s.A.empty()) j["center"] = s.A;
        } else if constexpr (std::is_same_v<S, WhitneyCpn>) {
          j["example"] = "whitney-cpn";
          j["n"] = s.n;
          j["theta"] = s.theta;
          j["c"] = s.c;
        } else {
          j["example"] = "perturbed";
          ordered_json base;
          std::visit(
              [&base](const auto& b) {
                base = example_echo(ExampleSpec(b));
              },
              s.base);
          j["base"] = base;
          j["amplitude"] = s.amplitude;
          j["seed"] = s.seed;
          j["lagrangian_preserving"] = s.lagrangian_preserving;
        }
      },
      spec);
  return j;
}

// Canonical echo of the resolved configuration.  Output paths are where the
// report lives, not what it describes, so they are left out; this keeps
// reports byte-comparable across output directories.
inline ordered_json config_echo(const RunConfig& cfg,
                                const std::vector<CheckResult>& checks) {
  ordered_json j;
  j["command"] = to_string(cfg.command);
  const bool geometric =
      cfg.command == Command::analyze || cfg.command == Command::gap_check;
  if (geometric) {
    ordered_json ex = example_echo(*cfg.example);
    for (auto& [k, v] : ex.items()) j[k] = v;
    j["resolution"] = cfg.resolution;
    j["engine"] = to_string(cfg.engine);
    if (cfg.expect_verdict) j["expect_verdict"] = *cfg.expect_verdict;
  } else {
    j["p"] = cfg.p;
    j["dim"] = cfg.dim;
    if (cfg.command == Command::lili) {
      j["trials"] = cfg.trials;
      j["scale"] = cfg.scale;
    } else {
      j["iters"] = cfg.iters;
    }
    j["seed"] = cfg.seed;
  }
  ordered_json names = ordered_json::array();
  ordered_json tols = ordered_json::object();
  for (const CheckResult& c : checks) {
    names.push_back(c.name);
    if (c.tolerance) tols[c.name] = *c.tolerance;
  }
  tols["gap-classification"] = resolved_tolerance(cfg, "gap-classification");
  j["checks"] = names;
  j["tolerances"] = tols;
  return j;
}

inline ordered_json checks_json(const std::vector<CheckResult>& checks) {
  ordered_json arr = ordered_json::array();
  for (const CheckResult& c : checks) {
    ordered_json j;
    j["name"] = c.name;
    j["measured"] = c.measured;
    j["tolerance"] = c.tolerance ? ordered_json(*c.tolerance) : ordered_json();
    j["pass"] = c.pass;
    arr.push_back(j);
  }
  return arr;
}

inline ordered_json stats_json(const ScalarStats& st) {
  ordered_json j;
  j["sup"] = st.sup;
  j["mean"] = st.mean;
  j["inf"] = st.inf;
  return j;
}

inline ordered_json gap_json(const GapVerdict& g) {
  ordered_json j;
  j["verdict"] = g.verdict;
  j["sup_excess"] = g.sup_excess;
  j["excess_ratio"] = g.excess_ratio;
  j["threshold_min"] = g.threshold_min;
  j["threshold_max"] = g.threshold_max;
  j["form_residual"] = g.form_residual;
  j["sup_H2"] = g.sup_H2;
  j["tolerance"] = g.tolerance;
  return j;
}

inline std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file " + path.string());
  out << text;
  if (!out.good())
    throw EvaluationError("failed writing output file " + path.string());
}

// Pointwise invariants for every grid node using the requested jet engine,
// plus region-weighted statistics; mirrors the exact pass in analyze_map.
struct PointwisePass {
  std::vector<PointInvariants> invariants;  // aligned with grid.nodes
  ScalarStats h_norm2, H_norm2, B_norm2;
  ScalarStats lagrangian_defect, eq3_residual, h_symmetry_defect;
  GapVerdict gap;
};

inline PointwisePass pointwise_pass(const ImmersionMap& map,
                                    const SampleGrid& grid, Engine engine,
                                    double gap_tolerance,
                                    std::size_t gauss_subsample) {
  const AmbientModel& model = map.target;
  PointwisePass out;
  out.invariants.resize(grid.nodes.size());
  double wsum = 0.0;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    PointInvariants inv;
    try {
      if (engine == Engine::exact) {
        const Chart& chart = map.atlas[static_cast<std::size_t>(p.chart)];
        GeomCore<double> core = eval_geom_core<double>(model, chart, p.u);
        FundForms ff;
        ff.h = core.h;
        ff.H = core.Hamb;
        ff.Hstar = core.Hstar;
        ff.Hnorm2 = core.Hnorm2;
        BTensor bt = b_tensor(ff, map.n);
        inv = point_invariants(ff, bt, pairing_defect(model, core));
      } else {
        ParamPoint q;
        q.chart = p.chart;
        q.u = p.u;
        Jet jet = evaluate_jet(map, q, 2, JetEngine::Fd);
        Frame frame = build_frame(model, jet);
        FundForms ff = second_fundamental_form(model, jet, frame);
        BTensor bt = b_tensor(ff, map.n);
        inv = point_invariants(ff, bt, lagrangian_defect(model, jet));
      }
    } catch (const Error& e) {
      throw EvaluationError(std::string(e.what()) + " at " + node_location(p));
    }
    out.invariants[i] = inv;
    if (!p.in_region) continue;
    wsum += p.weight;
    accumulate(out.h_norm2, inv.h_norm2, p.weight);
    accumulate(out.H_norm2, inv.H_norm2, p.weight);
    accumulate(out.B_norm2, inv.B_norm2, p.weight);
    accumulate(out.lagrangian_defect, inv.lagrangian_defect, p.weight);
    accumulate(out.eq3_residual, inv.eq3_residual, p.weight);
    accumulate(out.h_symmetry_defect, inv.h_symmetry_defect, p.weight);
  }
  for (ScalarStats* st :
       {&out.h_norm2, &out.H_norm2, &out.B_norm2, &out.lagrangian_defect,
        &out.eq3_residual, &out.h_symmetry_defect}) {
    st->mean /= wsum;
    st->mean = std::clamp(st->mean, st->inf, st->sup);
  }

  if (gauss_subsample > 0) {
    std::vector<std::size_t> region;
    region.reserve(grid.region_count);
    for (std::size_t i = 0; i < grid.nodes.size(); ++i)
      if (grid.nodes[i].in_region) region.push_back(i);
    const std::size_t stride =
        std::max<std::size_t>(1, region.size() / gauss_subsample);
    for (std::size_t k = 0; k < region.size(); k += stride) {
      const GridNode& p = grid.nodes[region[k]];
      ParamPoint q;
      q.chart = p.chart;
      q.u = p.u;
      out.invariants[region[k]].gauss_residual = gauss_residual(model, map, q);
    }
  }

  std::vector<PointInvariants> region_inv;
  region_inv.reserve(grid.region_count);
  for (std::size_t i = 0; i < grid.nodes.size(); ++i)
    if (grid.nodes[i].in_region) region_inv.push_back(out.invariants[i]);
  out.gap = gap_verdict(region_inv, map.n, model.c, gap_tolerance);
  return out;
}

// Per-point table: one row per stored grid node, every pointwise invariant,
// floats with 17 significant digits.
inline std::string points_table(const SampleGrid& grid,
                                const std::vector<PointInvariants>& inv) {
  std::string out = "chart";
  for (int a = 0; a < grid.n; ++a) out += ",idx" + std::to_string(a);
  for (int a = 0; a < grid.n; ++a) out += ",u" + std::to_string(a);
  out +=
      ",weight,in_region,h_norm2,B_norm2,H_norm2,eq3_residual,"
      "lagrangian_defect,h_symmetry_defect,gauss_residual\n";
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const GridNode& p = grid.nodes[i];
    out += std::to_string(p.chart);
    for (int v : p.idx) out += "," + std::to_string(v);
    for (double u : p.u) out += "," + format17(u);
    out += "," + format17(p.weight);
    out += p.in_region ? ",1" : ",0";
    out += "," + format17(inv[i].h_norm2);
    out += "," + format17(inv[i].B_norm2);
    out += "," + format17(inv[i].H_norm2);
    out += "," + format17(inv[i].eq3_residual);
    out += "," + format17(inv[i].lagrangian_defect);
    out += "," + format17(inv[i].h_symmetry_defect);
    out += ",";
    if (inv[i].gauss_residual) out += format17(*inv[i].gauss_residual);
    out += "\n";
  }
  return out;
}

// Default check set for a geometric command, honoring what the map claims
// about itself and which closed forms are available.
inline std::vector<std::string> default_checks(const RunConfig& cfg,
                                               const ImmersionMap& map,
                                               const ExpectedInvariants& exp) {
  std::vector<std::string> out;
  if (cfg.command == Command::analyze) {
    if (map.lagrangian) {
      out.emplace_back("lagrangian-defect");
      out.emplace_back("h-symmetry");
      out.emplace_back("mean-curvature-relation");
    }
    if (map.conformal_maslov) {
      out.emplace_back("maslov-conformal");
      out.emplace_back("maslov-equivalence");
      out.emplace_back("simons-margin");
    }
    out.emplace_back("gauss-equation");
    if (exp.any) out.emplace_back("closed-form-match");
    out.emplace_back("threshold-agreement");
  } else {
    out.emplace_back("threshold-agreement");
    if (cfg.expect_verdict) out.emplace_back("expected-verdict");
  }
  return out;
}

// Largest deviation of the measured statistics from the example's closed
// forms; covers constant invariants and the pointwise trace relation tying
// ||h||^2 to |H|^2 when the traceless part vanishes.
inline double closed_form_deviation(const ExpectedInvariants& exp,
                                    const PointwisePass& pw,
                                    const SampleGrid& grid, int n) {
  double dev = 0.0;
  auto against = [&dev](const ScalarStats& st, double want) {
    dev = std::max(dev, std::abs(st.sup - want));
    dev = std::max(dev, std::abs(st.inf - want));
  };
  if (exp.h_norm2) against(pw.h_norm2, *exp.h_norm2);
  if (exp.H_norm2) against(pw.H_norm2, *exp.H_norm2);
  if (exp.B_norm2) against(pw.B_norm2, *exp.B_norm2);
  if (exp.b_vanishes) dev = std::max(dev, pw.B_norm2.sup);
  if (exp.whitney_relation) {
    const double k = 3.0 * n * n / double(n + 2);
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
      if (!grid.nodes[i].in_region) continue;
      const PointInvariants& inv = pw.invariants[i];
      dev = std::max(dev, std::abs(inv.h_norm2 - k * inv.H_norm2));
    }
  }
  return dev;
}

inline ordered_json report_skeleton(const RunConfig& cfg,
                                    const std::vector<CheckResult>& checks) {
  ordered_json rep;
  rep["schema_version"] = kReportSchemaVersion;
  rep["tool"] = ordered_json{{"name", kToolName}, {"version", kToolVersion}};
  rep["command"] = to_string(cfg.command);
  rep["config"] = config_echo(cfg, checks);
  return rep;
}

inline double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

// Executes one configured run and writes its artifacts under the resolved
// output directory.  Configuration problems (including check lists that do
// not fit the example) throw ConfigError before anything is written; errors
// inside the pipeline produce a report with status "error" and exit code 3.
inline RunArtifacts run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  validate_config(cfg);

  std::string dir = cfg.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("LAGLAB_OUT_DIR");
    dir = (env && *env) ? env : ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory " + dir + ": " +
                      ec.message());

  RunArtifacts art;
  art.report_path = fs::path(dir) / cfg.report_file;
  const auto t0 = std::chrono::steady_clock::now();
  const bool geometric =
      cfg.command == Command::analyze || cfg.command == Command::gap_check;

  // --- setup phase: anything thrown here is a configuration problem -------
  ImmersionMap map;
  ExpectedInvariants expected;
  std::vector<std::string> check_names = cfg.checks;
  if (geometric) {
    try {
      map = make_immersion(*cfg.example);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    expected = expected_invariants(*cfg.example);
    if (check_names.empty())
      check_names = detail::default_checks(cfg, map, expected);
    for (const std::string& name : check_names)
      if (name == "closed-form-match" && !expected.any)
        throw ConfigError(
            "check \"closed-form-match\" needs an example with closed-form "
            "invariants");
  } else if (check_names.empty()) {
    check_names = {cfg.command == Command::lili ? "trial-gap-floor"
                                                : "search-gap-floor"};
  }

  std::vector<detail::CheckResult> checks;
  checks.reserve(check_names.size());
  for (const std::string& name : check_names) {
    detail::CheckResult c;
    c.name = name;
    if (name != "expected-verdict")
      c.tolerance = detail::resolved_tolerance(cfg, name);
    checks.push_back(c);
  }

  // --- pipeline phase ------------------------------------------------------
  std::string points_text;
  bool points_partial = false;
  try {
    ordered_json summary;
    ordered_json extra;  // command-specific section
    std::string extra_key;
    std::optional<GapVerdict> gap;

    if (cfg.command == Command::analyze) {
      AnalyzeOptions opt;
      opt.gap_tolerance = detail::resolved_tolerance(cfg, "gap-classification");
      FieldReport fr = analyze_map(map, cfg.resolution, opt);

      detail::PointwisePass pw;
      if (cfg.engine == Engine::exact) {
        pw.invariants = fr.invariants;
        pw.h_norm2 = fr.h_norm2;
        pw.H_norm2 = fr.H_norm2;
        pw.B_norm2 = fr.B_norm2;
        pw.lagrangian_defect = fr.lagrangian_defect;
        pw.eq3_residual = fr.eq3_residual;
        pw.h_symmetry_defect = fr.h_symmetry_defect;
        pw.gap = fr.gap;
      } else {
        pw = detail::pointwise_pass(map, fr.grid, cfg.engine, opt.gap_tolerance,
                                    64);
      }
      gap = pw.gap;

      summary["n"] = fr.n;
      summary["resolution"] = fr.resolution;
      summary["engine"] = to_string(cfg.engine);
      summary["region_points"] = fr.grid.region_count;
      summary["volume"] = fr.volume;
      ordered_json invs;
      invs["h_norm2"] = detail::stats_json(pw.h_norm2);
      invs["H_norm2"] = detail::stats_json(pw.H_norm2);
      invs["B_norm2"] = detail::stats_json(pw.B_norm2);
      invs["lagrangian_defect"] = detail::stats_json(pw.lagrangian_defect);
      invs["eq3_residual"] = detail::stats_json(pw.eq3_residual);
      invs["h_symmetry_defect"] = detail::stats_json(pw.h_symmetry_defect);
      summary["invariants"] = invs;
      ordered_json fieldj;
      fieldj["maslov_defect"] = fr.maslov_defect;
      fieldj["equivalence_residual"] = fr.equivalence_residual;
      fieldj["codazzi_defect_h"] = fr.codazzi_defect_h;
      fieldj["codazzi_defect_b"] = fr.codazzi_defect_b;
      fieldj["simons_margin"] = fr.simons_margin;
      fieldj["integral_B2"] = fr.integral_B2;
      fieldj["integral_lap_B2"] = fr.integral_lap_B2;
      fieldj["gauss_sup"] = fr.gauss_sup;
      fieldj["gauss_samples"] = fr.gauss_samples;
      summary["field"] = fieldj;
      summary["warnings"] = fr.warnings;

      for (detail::CheckResult& c : checks) {
        double measured = 0.0;
        bool pass;
        if (c.name == "lagrangian-defect")
          measured = pw.lagrangian_defect.sup;
        else if (c.name == "h-symmetry")
          measured = pw.h_symmetry_defect.sup;
        else if (c.name == "mean-curvature-relation")
          measured = pw.eq3_residual.sup;
        else if (c.name == "gauss-equation")
          measured = fr.gauss_sup;
        else if (c.name == "maslov-conformal")
          measured = fr.maslov_defect;
        else if (c.name == "maslov-equivalence")
          measured = fr.equivalence_residual;
        else if (c.name == "codazzi-h")
          measured = fr.codazzi_defect_h;
        else if (c.name == "codazzi-b")
          measured = fr.codazzi_defect_b;
        else if (c.name == "simons-margin")
          measured = fr.simons_margin;
        else if (c.name == "closed-form-match")
          measured = detail::closed_form_deviation(expected, pw, fr.grid, fr.n);
        else  // threshold-agreement
          measured = gap->form_residual;
        if (c.name == "simons-margin")
          pass = measured >= -*c.tolerance;
        else
          pass = measured <= *c.tolerance;
        c.measured = measured;
        c.pass = pass;
      }

      points_text = detail::points_table(fr.grid, pw.invariants);
      art.points_path = fs::path(dir) / cfg.points_file;
    } else if (cfg.command == Command::gap_check) {
      SampleGrid grid = build_grid(map, cfg.resolution);
      const double gap_tol =
          detail::resolved_tolerance(cfg, "gap-classification");
      detail::PointwisePass pw =
          detail::pointwise_pass(map, grid, cfg.engine, gap_tol, 0);
      gap = pw.gap;

      summary["n"] = map.n;
      summary["resolution"] = cfg.resolution;
      summary["engine"] = to_string(cfg.engine);
      summary["region_points"] = grid.region_count;
      ordered_json invs;
      invs["h_norm2"] = detail::stats_json(pw.h_norm2);
      invs["H_norm2"] = detail::stats_json(pw.H_norm2);
      invs["B_norm2"] = detail::stats_json(pw.B_norm2);
      invs["lagrangian_defect"] = detail::stats_json(pw.lagrangian_defect);
      invs["eq3_residual"] = detail::stats_json(pw.eq3_residual);
      invs["h_symmetry_defect"] = detail::stats_json(pw.h_symmetry_defect);
      summary["invariants"] = invs;

      for (detail::CheckResult& c : checks) {
        if (c.name == "expected-verdict") {
          c.measured = gap->verdict;
          c.pass = gap->verdict == *cfg.expect_verdict;
          continue;
        }
        double measured = 0.0;
        if (c.name == "lagrangian-defect")
          measured = pw.lagrangian_defect.sup;
        else if (c.name == "h-symmetry")
          measured = pw.h_symmetry_defect.sup;
        else if (c.name == "mean-curvature-relation")
          measured = pw.eq3_residual.sup;
        else if (c.name == "closed-form-match")
          measured = detail::closed_form_deviation(expected, pw, grid, map.n);
        else  // threshold-agreement
          measured = gap->form_residual;
        c.measured = measured;
        c.pass = measured <= *c.tolerance;
      }
    } else if (cfg.command == Command::lili) {
      double min_norm = std::numeric_limits<double>::infinity();
      double min_gap = 0.0, rhs_at_min = 0.0;
      int min_index = 0;
      for (int t = 0; t < cfg.trials; ++t) {
        const std::uint64_t s = cfg.seed + static_cast<std::uint64_t>(t);
        try {
          LiLiGap g = li_li_gap(
              random_family(cfg.p, cfg.dim, s, cfg.scale));
          const double norm = g.gap / std::max(g.rhs, 1.0);
          if (norm < min_norm) {
            min_norm = norm;
            min_gap = g.gap;
            rhs_at_min = g.rhs;
            min_index = t;
          }
        } catch (const Error& e) {
          throw EvaluationError(std::string(e.what()) + " at trial " +
                                std::to_string(t) + " (seed " +
                                std::to_string(s) + ")");
        }
      }
      extra_key = "trials";
      extra["p"] = cfg.p;
      extra["dim"] = cfg.dim;
      extra["count"] = cfg.trials;
      extra["seed"] = cfg.seed;
      extra["scale"] = cfg.scale;
      extra["min_normalized_gap"] = min_norm;
      extra["min_gap"] = min_gap;
      extra["rhs_at_min"] = rhs_at_min;
      extra["min_trial_index"] = min_index;

      for (detail::CheckResult& c : checks) {  // trial-gap-floor
        c.measured = min_norm;
        c.pass = min_norm >= -*c.tolerance;
      }
    } else {  // lili-search
      GapSearchResult res = minimize_gap(cfg.p, cfg.dim, cfg.seed, cfg.iters);
      const double floor = std::max(res.rhs, 1.0);
      extra_key = "search";
      extra["p"] = cfg.p;
      extra["dim"] = cfg.dim;
      extra["seed"] = cfg.seed;
      extra["iters"] = cfg.iters;
      extra["best_gap"] = res.gap;
      extra["best_rhs"] = res.rhs;
      extra["best_ratio"] = res.gap / floor;
      extra["best_after_restart"] = res.best_after_restart;
      ordered_json fam = ordered_json::array();
      for (const Matrix<double>& A : res.family.A) fam.push_back(A.a);
      extra["best_family"] = fam;

      for (detail::CheckResult& c : checks) {  // search-gap-floor
        c.measured = res.gap / floor;
        c.pass = res.gap >= -*c.tolerance * floor;
      }
    }

    bool all_pass = true;
    for (const detail::CheckResult& c : checks) all_pass = all_pass && c.pass;
    art.status = all_pass ? "pass" : "check-failure";
    art.exit_code = all_pass ? 0 : 1;

    ordered_json rep = detail::report_skeleton(cfg, checks);
    rep["checks"] = detail::checks_json(checks);
    if (!summary.is_null()) rep["summary"] = summary;
    if (!extra_key.empty()) rep[extra_key] = extra;
    if (gap) rep["gap"] = detail::gap_json(*gap);
    rep["status"] = art.status;
    rep["timings"] =
        ordered_json{{"total_seconds", detail::seconds_since(t0)}};
    art.report = rep;
  } catch (const Error& e) {
    art.status = "error";
    art.exit_code = 3;
    ordered_json rep = detail::report_skeleton(cfg, checks);
    rep["error"] = ordered_json{{"message", std::string(e.what())}};
    rep["status"] = art.status;
    rep["timings"] =
        ordered_json{{"total_seconds", detail::seconds_since(t0)}};
    art.report = rep;
    points_partial = true;
  }

  detail::write_text(art.report_path, art.report.dump(2) + "\n");
  if (!art.points_path.empty()) {
    if (points_partial) points_text += "# error: run aborted, table incomplete\n";
    detail::write_text(art.points_path, points_text);
  } else if (points_partial && cfg.command == Command::analyze) {
    art.points_path = fs::path(dir) / cfg.points_file;
    detail::write_text(art.points_path,
                       "# error: run aborted before the table was computed\n");
  }
  return art;
}

}  // namespace laglab
