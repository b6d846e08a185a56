// Command-line driver: analyze and gap-check immersed examples, run seeded
// matrix-inequality trials, or search for near-equality families.  A JSON
// config file given via --config supersedes all flags; see parse_config for
// the schema.  Exit codes: 0 all checks pass, 1 check failure, 2 bad
// configuration, 3 numerical or internal error.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "laglab/cli.hpp"

namespace {

struct GeometricFlags {
  std::string example;
  int n = 0;
  double r = 0.0, theta = 0.0, c = 0.0;
  std::vector<double> radii;
  CLI::Option *opt_n = nullptr, *opt_r = nullptr, *opt_theta = nullptr,
              *opt_c = nullptr, *opt_radii = nullptr;
};

void add_geometric_flags(CLI::App* sub, GeometricFlags* g, laglab::RunConfig* cfg,
                         std::string* engine, std::string* out) {
  sub->add_option("--example", g->example,
                  "flat-torus | flat-plane | whitney-cn | whitney-cpn");
  g->opt_n = sub->add_option("--n", g->n, "parameter dimension");
  g->opt_r = sub->add_option("--r", g->r, "whitney-cn radius");
  g->opt_theta = sub->add_option("--theta", g->theta, "whitney-cpn angle");
  g->opt_c = sub->add_option("--c", g->c, "holomorphic curvature scale");
  g->opt_radii = sub->add_option("--radii", g->radii, "torus radii")
                     ->delimiter(',')
                     ->expected(1, -1);
  sub->add_option("--resolution", cfg->resolution, "grid nodes per axis");
  sub->add_option("--engine", *engine, "exact | fd")
      ->check(CLI::IsMember({"exact", "fd"}));
  sub->add_option("--out", *out, "output directory");
}

laglab::ExampleSpec spec_from_flags(const GeometricFlags& g) {
  if (g.example.empty())
    throw laglab::ConfigError("missing --example (or use --config)");
  if (g.example == "perturbed")
    throw laglab::ConfigError(
        "perturbed examples are only reachable through --config");
  laglab::detail::ExampleParams p;
  p.name = g.example;
  if (g.opt_n->count()) p.n = g.n;
  if (g.opt_r->count()) p.r = g.r;
  if (g.opt_theta->count()) p.theta = g.theta;
  if (g.opt_c->count()) p.c = g.c;
  if (g.opt_radii->count()) p.radii = g.radii;
  return std::visit([](auto&& s) { return laglab::ExampleSpec(s); },
                    laglab::detail::make_base_example(p));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw laglab::ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric diagnostics for Lagrangian immersions and"
               " symmetric-matrix pinching inequalities"};
  app.require_subcommand(0, 1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON run configuration (supersedes all flags)");

  GeometricFlags an_flags, gc_flags;
  laglab::RunConfig an_cfg, gc_cfg, li_cfg, ls_cfg;
  std::string an_engine = "exact", gc_engine = "exact";
  std::string an_out, gc_out, li_out, ls_out;
  std::string gc_expect;

  CLI::App* analyze = app.add_subcommand("analyze", "full diagnostic battery");
  analyze->fallthrough();
  add_geometric_flags(analyze, &an_flags, &an_cfg, &an_engine, &an_out);

  CLI::App* gapcheck =
      app.add_subcommand("gap-check", "pinching verdict only");
  gapcheck->fallthrough();
  add_geometric_flags(gapcheck, &gc_flags, &gc_cfg, &gc_engine, &gc_out);
  gapcheck->add_option("--expect-verdict", gc_expect,
                       "fail unless the verdict matches");

  CLI::App* lili = app.add_subcommand("lili", "seeded random-family trials");
  lili->fallthrough();
  lili->add_option("--p", li_cfg.p, "family size")->required();
  lili->add_option("--dim", li_cfg.dim, "matrix dimension")->required();
  lili->add_option("--trials", li_cfg.trials, "number of families");
  lili->add_option("--seed", li_cfg.seed, "base seed");
  lili->add_option("--out", li_out, "output directory");

  CLI::App* search =
      app.add_subcommand("lili-search", "hill-climb toward equality");
  search->fallthrough();
  search->add_option("--p", ls_cfg.p, "family size")->required();
  search->add_option("--dim", ls_cfg.dim, "matrix dimension")->required();
  search->add_option("--iters", ls_cfg.iters, "proposal budget");
  search->add_option("--seed", ls_cfg.seed, "search seed");
  search->add_option("--out", ls_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    laglab::RunConfig cfg;
    if (!config_path.empty()) {
      cfg = laglab::parse_config(slurp(config_path));
    } else if (analyze->parsed() || gapcheck->parsed()) {
      const bool is_analyze = analyze->parsed();
      cfg = is_analyze ? an_cfg : gc_cfg;
      cfg.command =
          is_analyze ? laglab::Command::analyze : laglab::Command::gap_check;
      const GeometricFlags& g = is_analyze ? an_flags : gc_flags;
      cfg.example = spec_from_flags(g);
      cfg.engine = (is_analyze ? an_engine : gc_engine) == "fd"
                       ? laglab::Engine::fd
                       : laglab::Engine::exact;
      cfg.out_dir = is_analyze ? an_out : gc_out;
      if (!is_analyze && !gc_expect.empty()) cfg.expect_verdict = gc_expect;
      laglab::validate_config(cfg);
    } else if (lili->parsed()) {
      cfg = li_cfg;
      cfg.command = laglab::Command::lili;
      cfg.out_dir = li_out;
      laglab::validate_config(cfg);
    } else if (search->parsed()) {
      cfg = ls_cfg;
      cfg.command = laglab::Command::lili_search;
      cfg.out_dir = ls_out;
      laglab::validate_config(cfg);
    } else {
      std::fprintf(stderr, "laglab: no command given (see --help)\n");
      return 2;
    }

    laglab::RunArtifacts art = laglab::run(cfg);
    std::printf("laglab %s: %s (report: %s)\n", to_string(cfg.command).c_str(),
                art.status.c_str(), art.report_path.string().c_str());
    if (art.status == "error")
      std::fprintf(stderr, "laglab: %s\n",
                   art.report["error"]["message"].get<std::string>().c_str());
    return art.exit_code;
  } catch (const laglab::ConfigError& e) {
    std::fprintf(stderr, "laglab: configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "laglab: error: %s\n", e.what());
    return 3;
  }
}
