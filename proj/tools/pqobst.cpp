// Command line front end: pqobst <solve|sweep|probe|conjugate|report> [--config PATH] [--out DIR] [--seed N]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "pqobst/cli.hpp"
#include "pqobst/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Obstacle problems with (p,q)-growth: solve, certify, probe"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 42;
  bool seed_given = false;
  for (const char* verb : {"solve", "sweep", "probe", "conjugate", "report"}) {
    CLI::App* sub = app.add_subcommand(verb);
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "RNG seed (default 42)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pqobst::kExitInvalid;
  }

  pqobst::RunConfig config;
  try {
    if (!config_path.empty()) config = pqobst::load_config(config_path);
  } catch (const pqobst::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pqobst::kExitInvalid;
  }
  if (!out_dir.empty()) config.output = out_dir;
  if (seed_given) config.seed = seed;

  return pqobst::run_command(app.get_subcommands().front()->get_name(), config, std::cerr);
}
