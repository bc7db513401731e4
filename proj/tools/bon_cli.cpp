// Command-line front end for the balanced-overlay simulator. All real work
// lives in bon/cli_commands.hpp; this file only parses argv and dispatches.

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bon/cli_commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"balanced overlay network simulator and analysis toolkit"};
  app.require_subcommand(1);

  bon::cli::CommonArgs args;
  std::string axis;
  std::vector<double> values;
  std::string in_dir;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", args.config_path, "scenario config file")->required();
    sub->add_option("--out", args.out_dir, "output directory (or set BON_OUT_DIR)");
    sub->add_option("--seed", args.seed, "override the config's RNG seed");
  };

  CLI::App* run = app.add_subcommand("run", "simulate one scenario");
  add_common(run, true);
  run->add_option("--snapshots", args.snapshots,
                  "write a graph snapshot every S steps (0 = off)");

  CLI::App* compare =
      app.add_subcommand("compare", "run the same trace through bon and a central scheduler");
  add_common(compare, true);

  CLI::App* sweep = app.add_subcommand("sweep", "rerun a base config across an axis");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "numeric config key to vary")->required();
  sweep->add_option("--values", values, "axis values (comma separated)")
      ->required()
      ->delimiter(',');
  sweep->add_option("--parallelism", args.parallelism, "worker threads (default 1)");

  CLI::App* analyze = app.add_subcommand("analyze", "post-process a finished run directory");
  analyze->add_option("--in", in_dir, "run directory with metrics.csv (and snapshots/)")
      ->required();
  analyze->add_option("--out", args.out_dir, "output directory (or set BON_OUT_DIR)");

  CLI::App* validate =
      app.add_subcommand("validate-eq1", "test the stationary free-capacity law");
  add_common(validate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) return bon::cli::cmd_run(args);
  if (compare->parsed()) return bon::cli::cmd_compare(args);
  if (sweep->parsed()) return bon::cli::cmd_sweep(args, axis, values);
  if (analyze->parsed()) return bon::cli::cmd_analyze(in_dir, args);
  if (validate->parsed()) return bon::cli::cmd_validate_eq1(args);
  return 2;
}
