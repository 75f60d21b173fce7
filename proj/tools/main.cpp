#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

#include "porodyn/commands.hpp"
#include "porodyn/config.hpp"
#include "porodyn/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "TOML run configuration")->required();
  args.seed_opt = cmd->add_option("--seed", args.seed, "Override the config's master seed");
  args.out_opt = cmd->add_option("--out", args.out_dir, "Override the output directory");
}

porodyn::RunConfig load(const CommonArgs& args) {
  porodyn::RunConfig cfg = porodyn::parse_config(args.config_path);
  if (args.seed_opt->count() > 0) cfg.seed = args.seed;
  if (args.out_opt->count() > 0) cfg.outputs.directory = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"porodyn: degenerate diffusion-reaction solver and diagnostics"};
  app.require_subcommand(1);

  CommonArgs solve_args, verify_args, regularity_args, kinetic_args, sweep_args;
  std::string suite = "all";
  std::string preset_name;

  CLI::App* solve =
      app.add_subcommand("solve", "Run the configured problem and export its trajectory");
  add_common(solve, solve_args);

  CLI::App* verify = app.add_subcommand("verify", "Run randomized property checks");
  add_common(verify, verify_args);
  verify->add_option("--suite", suite,
                     "contraction|comparison|positivity|energy|chi|defect|all");

  CLI::App* regularity =
      app.add_subcommand("regularity", "Refinement scan of space-time fractional norms");
  add_common(regularity, regularity_args);

  CLI::App* kinetic =
      app.add_subcommand("kinetic", "Bin the dissipation measure of a smoothed-flux run");
  add_common(kinetic, kinetic_args);

  CLI::App* sweep = app.add_subcommand("sweep", "Run the [sweep] parameter grid");
  add_common(sweep, sweep_args);

  CLI::App* presets = app.add_subcommand("presets", "Print a shipped example config");
  presets->add_option("--name", preset_name, "biofilm_a1b1|biofilm_a1b2|pme_m2_barenblatt|heat_sanity")
      ->required();

  CLI11_PARSE(app, argc, argv);

  std::string config_path = "<none>";
  try {
    if (presets->parsed()) {
      std::fputs(porodyn::preset_config(preset_name).c_str(), stdout);
      return 0;
    }
    if (solve->parsed()) {
      config_path = solve_args.config_path;
      return porodyn::cmd_solve(load(solve_args));
    }
    if (verify->parsed()) {
      config_path = verify_args.config_path;
      return porodyn::cmd_verify(load(verify_args), suite);
    }
    if (regularity->parsed()) {
      config_path = regularity_args.config_path;
      return porodyn::cmd_regularity(load(regularity_args));
    }
    if (kinetic->parsed()) {
      config_path = kinetic_args.config_path;
      return porodyn::cmd_kinetic(load(kinetic_args));
    }
    if (sweep->parsed()) {
      config_path = sweep_args.config_path;
      const porodyn::RunConfig cfg = load(sweep_args);
      return porodyn::cmd_sweep(cfg, cfg.sweep);
    }
  } catch (const porodyn::Error& e) {
    std::fprintf(stderr, "porodyn: %s\n  (config: %s)\n", e.what(), config_path.c_str());
    return 2;
  }
  return 0;
}
