// ltn_main.cpp: command-line front end for the experiment suite.
#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ltn/experiments.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;  // 0: leave to the configuration file
  bool spy = false;
};

int execute(const std::string& experiment, const Options& opts) {
  ltn::Config cfg = opts.config_path.empty()
                        ? ltn::Config()
                        : ltn::Config::fromFile(opts.config_path);
  if (opts.threads > 0) cfg.set("threads", std::to_string(opts.threads));
  if (opts.spy) cfg.set("spy", "true");
  std::string name = experiment;
  if (name.empty()) {
    // The patch subcommand dispatches on the configured dimension and
    // discretization pair.
    const int dim = cfg.getInt("dim", 1);
    const std::string pair = cfg.getString("pair", "p1p1");
    if (dim == 2)
      name = "patch_2d";
    else
      name = pair == "p0p1" ? "patch_1d_p0p1" : "patch_1d";
  }
  const ltn::ExperimentResult res =
      ltn::runExperiment(name, cfg, opts.out_dir);
  std::fputs(res.summary_jsonl.c_str(), stdout);
  std::printf("%s: %s (outputs in %s)\n", res.name.c_str(),
              res.ok ? "ok" : "CHECK FAILED", opts.out_dir.c_str());
  return res.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spliced local-to-nonlocal diffusion experiments"};
  app.require_subcommand(1);

  Options opts;
  // cli name -> experiment name ("" = dispatched by config keys).
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"patch", ""},
      {"opt-compare", "opt_compare"},
      {"delta-conv", "delta_convergence"},
      {"jump1d", "jump_1d"},
      {"cylinder2d", "cylinder_2d_windows"},
      {"heat", "heat_2d"},
      {"verify-cases", "verify_cases"},
      {"dump-matrix", "dump_matrix"},
  };
  const std::map<std::string, std::string> descriptions = {
      {"patch", "patch tests: solutions both models reproduce exactly"},
      {"opt-compare", "optimization-based coupling against the spliced system"},
      {"delta-conv", "horizon convergence toward the local solution"},
      {"jump1d", "interior-jump solution, inverse-distance kernel"},
      {"cylinder2d", "discontinuous cylinder solution, varying windows"},
      {"heat", "time-dependent diffusion with window strategies"},
      {"verify-cases", "forcing oracles for every manufactured case"},
      {"dump-matrix", "export an assembled operator (MatrixMarket)"},
  };
  std::map<const CLI::App*, std::string> experiment_of;
  for (const auto& [cli_name, experiment] : subs) {
    CLI::App* cmd = app.add_subcommand(cli_name, descriptions.at(cli_name));
    cmd->add_option("--config", opts.config_path,
                    "flat key = value configuration file");
    cmd->add_option("--out", opts.out_dir, "output directory (default: out)");
    cmd->add_option("--threads", opts.threads, "assembly worker count");
    if (cli_name == "dump-matrix")
      cmd->add_flag("--spy", opts.spy, "also write an ASCII sparsity pattern");
    experiment_of[cmd] = experiment;
  }

  CLI11_PARSE(app, argc, argv);
  try {
    for (const CLI::App* cmd : app.get_subcommands())
      return execute(experiment_of.at(cmd), opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
