// Command-line front end: one subcommand per pipeline stage.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ualign/config.hpp"
#include "ualign/error.hpp"
#include "ualign/pipeline.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

ualign::RunConfig resolve(const Flags& flags) {
  ualign::RunConfig config = flags.config_path.empty()
                                 ? ualign::RunConfig()
                                 : ualign::RunConfig::load(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware alignment pipeline on a synthetic QA world"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "override the global seed");
  app.add_option("--out", flags.out_dir, "override the output directory");
  app.add_flag("--quiet", flags.quiet, "suppress progress output");

  std::vector<std::pair<CLI::App*, std::optional<ualign::Stage>>> commands;
  for (ualign::Stage s : ualign::all_stages()) {
    const std::string name(ualign::stage_name(s));
    commands.emplace_back(app.add_subcommand(name, "run the " + name + " stage"), s);
  }
  CLI::App* run_all = app.add_subcommand("run-all", "run every stage in order");
  CLI::App* print_config =
      app.add_subcommand("print-config", "print every configuration key with its value");

  CLI11_PARSE(app, argc, argv);

  try {
    const ualign::RunConfig config = resolve(flags);
    std::ostream* log = flags.quiet ? nullptr : &std::cerr;
    if (print_config->parsed()) {
      std::cout << config.print_config();
      return 0;
    }
    if (run_all->parsed()) {
      ualign::run_all(config, log);
      return 0;
    }
    for (const auto& [cmd, stage] : commands) {
      if (cmd->parsed()) ualign::run_stage(*stage, config, log);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "ualign: error: " << e.what() << "\n";
    return 1;
  }
}
