#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "laglab/cli.hpp"

using namespace laglab;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per use; lives under the system temp root.
fs::path scratch_dir() {
  static int counter = 0;
  fs::path p = fs::temp_directory_path() /
               ("laglab-cli-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

ordered_json load_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return ordered_json::parse(in);
}

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string dump_without_timings(const fs::path& p) {
  ordered_json j = load_json(p);
  REQUIRE(j.contains("timings"));
  REQUIRE(j["timings"]["total_seconds"].get<double>() >= 0.0);
  j.erase("timings");
  return j.dump(2);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("minimal config is parsed with defaults filled", "[cli]") {
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "flat-torus", "radii": [1, 1]})");
  REQUIRE(cfg.command == Command::analyze);
  REQUIRE(cfg.resolution == 48);
  REQUIRE(cfg.engine == Engine::exact);
  REQUIRE(cfg.report_file == "report.json");
  REQUIRE(cfg.points_file == "points.csv");
  REQUIRE(cfg.checks.empty());
  REQUIRE(cfg.example.has_value());
  const auto* torus = std::get_if<FlatTorus>(&*cfg.example);
  REQUIRE(torus != nullptr);
  REQUIRE(torus->radii == std::vector<double>{1.0, 1.0});
}

TEST_CASE("config validation names the offending field", "[cli]") {
  auto parse = [](const std::string& text) {
    return [text] { parse_config(text); };
  };

  std::string msg = error_message(
      parse(R"({"command": "analyze", "example": "flat-torus", "radii": [1, -1]})"));
  REQUIRE(msg.find("radii") != std::string::npos);

  msg = error_message(parse(R"({"command": "analyze", "example": "flat-torus"})"));
  REQUIRE(msg.find("radii") != std::string::npos);

  msg = error_message(parse(
      R"({"command": "analyze", "example": "flat-torus", "radii": [1, 1], "theta": 0.3})"));
  REQUIRE(msg.find("theta") != std::string::npos);

  msg = error_message(
      parse(R"({"command": "analyze", "example": "whitney-cpn", "n": 2})"));
  REQUIRE(msg.find("theta") != std::string::npos);

  msg = error_message(parse(
      R"({"command": "analyze", "example": "flat-plane", "n": 2, "resolution": 7})"));
  REQUIRE(msg.find("resolution") != std::string::npos);

  msg = error_message(parse(
      R"({"command": "analyze", "example": "flat-plane", "n": 2, "engine": "both"})"));
  REQUIRE(msg.find("engine") != std::string::npos);

  msg = error_message(parse(R"({"command": "lili", "p": 1, "dim": 2})"));
  REQUIRE(msg.find("\"p\"") != std::string::npos);

  // expect_verdict belongs to gap-check alone
  REQUIRE_THROWS_AS(
      parse_config(
          R"({"command": "analyze", "example": "flat-plane", "n": 2,
              "expect_verdict": "gap-violated"})"),
      ConfigError);
}

TEST_CASE("unknown keys are rejected with a nearest-match suggestion",
          "[cli]") {
  std::string msg = error_message([] {
    parse_config(
        R"({"command": "analyze", "example": "flat-torus", "radius": [1, 1]})");
  });
  REQUIRE(msg.find("radius") != std::string::npos);
  REQUIRE(msg.find("did you mean \"radii\"") != std::string::npos);

  msg = error_message([] {
    parse_config(R"({"command": "analize", "example": "flat-plane", "n": 2})");
  });
  REQUIRE(msg.find("did you mean \"analyze\"") != std::string::npos);

  msg = error_message([] {
    parse_config(
        R"({"command": "analyze", "example": "whitney-c", "n": 2})");
  });
  REQUIRE(msg.find("did you mean \"whitney-cn\"") != std::string::npos);

  msg = error_message([] {
    parse_config(
        R"({"command": "analyze", "example": "flat-plane", "n": 2,
            "checks": ["gauss-equatoin"]})");
  });
  REQUIRE(msg.find("did you mean \"gauss-equation\"") != std::string::npos);
}

TEST_CASE("malformed JSON reports line and column", "[cli]") {
  std::string msg = error_message(
      [] { parse_config("{\n  \"command\": \"analyze\",\n  oops\n}"); });
  REQUIRE(msg.find("line 3") != std::string::npos);
  REQUIRE(msg.find("column") != std::string::npos);
}

TEST_CASE("identity-guard tolerances may only be tightened", "[cli]") {
  // loosening a guard on a proved identity is rejected
  std::string msg = error_message([] {
    parse_config(
        R"({"command": "analyze", "example": "flat-plane", "n": 2,
            "tolerances": {"gauss-equation": 0.5}})");
  });
  REQUIRE(msg.find("gauss-equation") != std::string::npos);
  REQUIRE(msg.find("tightened") != std::string::npos);

  // tightening it is fine
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "flat-plane", "n": 2,
          "tolerances": {"gauss-equation": 1e-8}})");
  REQUIRE(cfg.tolerances.at("gauss-equation") == 1e-8);

  // classification margins may move in either direction
  cfg = parse_config(
      R"({"command": "analyze", "example": "flat-plane", "n": 2,
          "tolerances": {"lagrangian-defect": 1e-3}})");
  REQUIRE(cfg.tolerances.at("lagrangian-defect") == 1e-3);

  REQUIRE_THROWS_AS(
      parse_config(R"({"command": "analyze", "example": "flat-plane", "n": 2,
                       "tolerances": {"lagrangian-defect": -1.0}})"),
      ConfigError);
}

TEST_CASE("analyze writes a passing report with closed-form values", "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "flat-torus", "radii": [1, 1],
          "resolution": 16})");
  cfg.out_dir = dir.string();

  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 0);
  REQUIRE(art.status == "pass");

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["schema_version"] == "1.0");
  REQUIRE(rep["tool"]["name"] == "laglab");
  REQUIRE(rep["status"] == "pass");

  // report carries the closed forms for the square torus
  const auto& b2 = rep["summary"]["invariants"]["B_norm2"];
  REQUIRE(b2["sup"].get<double>() == Catch::Approx(0.5).margin(1e-8));
  REQUIRE(b2["inf"].get<double>() == Catch::Approx(0.5).margin(1e-8));
  REQUIRE(rep["gap"]["verdict"] == "gap-violated");
  REQUIRE(rep["gap"]["excess_ratio"].get<double>() ==
          Catch::Approx(3.0).margin(1e-6));

  // every configured check appears exactly once with a definite result
  std::vector<std::string> configured =
      rep["config"]["checks"].get<std::vector<std::string>>();
  REQUIRE(rep["checks"].size() == configured.size());
  for (std::size_t i = 0; i < configured.size(); ++i) {
    REQUIRE(rep["checks"][i]["name"] == configured[i]);
    REQUIRE(rep["checks"][i]["pass"].is_boolean());
    REQUIRE(rep["checks"][i]["pass"] == true);
  }
  std::vector<std::string> sorted = configured;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());

  // per-point table: header plus one row per stored node, all invariants
  std::string table = slurp(dir / "points.csv");
  REQUIRE(table.find("h_norm2") != std::string::npos);
  REQUIRE(table.find("gauss_residual") != std::string::npos);
  const std::size_t rows =
      static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n'));
  REQUIRE(rows == 16 * 16 + 1);

  fs::remove_all(dir);
}

TEST_CASE("analyze reports the Whitney sphere as gap-consistent", "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "whitney-cn", "n": 2, "r": 1.0,
          "resolution": 12})");
  cfg.out_dir = dir.string();

  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 0);

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["gap"]["verdict"] == "whitney-consistent");
  REQUIRE(rep["summary"]["invariants"]["B_norm2"]["sup"].get<double>() < 1e-9);
  fs::remove_all(dir);
}

TEST_CASE("gap-check is verdict-only and honors the expected verdict",
          "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "gap-check", "example": "flat-torus", "radii": [1, 1],
          "resolution": 12, "expect_verdict": "gap-violated"})");
  cfg.out_dir = dir.string();
  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 0);

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["gap"]["verdict"] == "gap-violated");
  REQUIRE_FALSE(rep["summary"].contains("field"));   // no derivative battery
  REQUIRE_FALSE(fs::exists(dir / "points.csv"));     // no table either

  // a wrong expectation turns into a check failure, not an error
  cfg.expect_verdict = "whitney-consistent";
  art = run(cfg);
  REQUIRE(art.exit_code == 1);
  REQUIRE(art.status == "check-failure");
  rep = load_json(dir / "report.json");
  bool found = false;
  for (const auto& c : rep["checks"]) {
    if (c["name"] != "expected-verdict") continue;
    found = true;
    REQUIRE(c["pass"] == false);
    REQUIRE(c["measured"] == "gap-violated");
  }
  REQUIRE(found);
  fs::remove_all(dir);
}

TEST_CASE("lili reports a non-negative minimum normalized gap", "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "lili", "p": 4, "dim": 5, "trials": 10000, "seed": 42})");
  cfg.out_dir = dir.string();
  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 0);

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["trials"]["count"] == 10000);
  REQUIRE(rep["trials"]["min_normalized_gap"].get<double>() >= 0.0);
  REQUIRE(rep["checks"][0]["name"] == "trial-gap-floor");
  REQUIRE(rep["checks"][0]["pass"] == true);
  fs::remove_all(dir);
}

TEST_CASE("lili-search converges toward the equality family", "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "lili-search", "p": 2, "dim": 2, "iters": 20000,
          "seed": 5})");
  cfg.out_dir = dir.string();
  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 0);

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["search"]["best_ratio"].get<double>() < 1e-6);
  REQUIRE(rep["search"]["best_ratio"].get<double>() >= -1e-12);
  std::vector<double> trace =
      rep["search"]["best_after_restart"].get<std::vector<double>>();
  REQUIRE(trace.size() == 8);
  for (std::size_t i = 1; i < trace.size(); ++i)
    REQUIRE(trace[i] <= trace[i - 1] + 1e-15);
  REQUIRE(rep["search"]["best_family"].size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("reports are byte-identical across reruns except timings", "[cli]") {
  fs::path d1 = scratch_dir(), d2 = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "flat-torus", "radii": [1.3, 0.8],
          "resolution": 16})");
  cfg.out_dir = d1.string();
  REQUIRE(run(cfg).exit_code == 0);
  cfg.out_dir = d2.string();
  REQUIRE(run(cfg).exit_code == 0);

  REQUIRE(dump_without_timings(d1 / "report.json") ==
          dump_without_timings(d2 / "report.json"));
  REQUIRE(slurp(d1 / "points.csv") == slurp(d2 / "points.csv"));

  // seeded matrix trials are deterministic too
  RunConfig li = parse_config(
      R"({"command": "lili", "p": 3, "dim": 4, "trials": 3000, "seed": 7})");
  li.out_dir = d1.string();
  REQUIRE(run(li).exit_code == 0);
  li.out_dir = d2.string();
  REQUIRE(run(li).exit_code == 0);
  REQUIRE(dump_without_timings(d1 / "report.json") ==
          dump_without_timings(d2 / "report.json"));

  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("fd engine runs the pointwise pass within its own defaults",
          "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "whitney-cn", "n": 2,
          "resolution": 12, "engine": "fd"})");
  cfg.out_dir = dir.string();
  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 0);

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["config"]["engine"] == "fd");
  // engine-dependent default is echoed with the check
  for (const auto& c : rep["checks"])
    if (c["name"] == "lagrangian-defect")
      REQUIRE(c["tolerance"].get<double>() == 1e-5);
  // finite differences still certify the example comfortably
  REQUIRE(rep["summary"]["invariants"]["lagrangian_defect"]["sup"]
              .get<double>() < 1e-9);
  fs::remove_all(dir);
}

TEST_CASE("pipeline failures produce a marked partial report and exit 3",
          "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "perturbed",
          "base": {"example": "whitney-cn", "n": 2},
          "amplitude": 1e200, "seed": 1, "resolution": 12})");
  cfg.out_dir = dir.string();
  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 3);
  REQUIRE(art.status == "error");

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["status"] == "error");
  // the error names the grid point at fault
  const std::string msg = rep["error"]["message"].get<std::string>();
  REQUIRE(msg.find("chart") != std::string::npos);
  REQUIRE(msg.find("node") != std::string::npos);
  // partial table carries a failure marker
  const std::string table = slurp(dir / "points.csv");
  REQUIRE(table.rfind("# error:", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("non-Lagrangian controls fail explicitly requested checks",
          "[cli]") {
  fs::path dir = scratch_dir();
  RunConfig cfg = parse_config(
      R"({"command": "analyze", "example": "perturbed",
          "base": {"example": "flat-torus", "radii": [1, 1]},
          "amplitude": 0.05, "seed": 2, "resolution": 16,
          "checks": ["h-symmetry", "threshold-agreement"]})");
  cfg.out_dir = dir.string();
  RunArtifacts art = run(cfg);
  REQUIRE(art.exit_code == 1);

  ordered_json rep = load_json(dir / "report.json");
  REQUIRE(rep["checks"].size() == 2);
  REQUIRE(rep["checks"][0]["name"] == "h-symmetry");
  REQUIRE(rep["checks"][0]["pass"] == false);
  REQUIRE(rep["checks"][0]["measured"].get<double>() > 1e-2);
  fs::remove_all(dir);
}

TEST_CASE("the environment variable supplies the default output directory",
          "[cli]") {
  fs::path dir = scratch_dir();
  REQUIRE(::setenv("LAGLAB_OUT_DIR", dir.c_str(), 1) == 0);
  RunConfig cfg = parse_config(
      R"({"command": "lili", "p": 2, "dim": 2, "trials": 5, "seed": 1})");
  RunArtifacts art = run(cfg);
  REQUIRE(::unsetenv("LAGLAB_OUT_DIR") == 0);
  REQUIRE(art.exit_code == 0);
  REQUIRE(art.report_path == dir / "report.json");
  REQUIRE(fs::exists(dir / "report.json"));
  fs::remove_all(dir);
}

TEST_CASE("checks must fit the command", "[cli]") {
  REQUIRE_THROWS_AS(
      parse_config(R"({"command": "lili", "p": 2, "dim": 2,
                       "checks": ["maslov-conformal"]})"),
      ConfigError);
  REQUIRE_THROWS_AS(
      parse_config(R"({"command": "analyze", "example": "flat-plane", "n": 2,
                       "checks": ["trial-gap-floor"]})"),
      ConfigError);
  // the classification margin is a tolerance knob, not a pass/fail check
  REQUIRE_THROWS_AS(
      parse_config(R"({"command": "analyze", "example": "flat-plane", "n": 2,
                       "checks": ["gap-classification"]})"),
      ConfigError);
}
