// bioremed: minimal-time depollution strategies from the command line.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

int main(int argc, char** argv) {
  using namespace bioremed::cli;

  CLI::App app{"Minimal-time pumping strategies for side-loop bioremediation"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  unsigned jobs = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario configuration file");
    sub->add_option("--set", overrides, "Override, section.key=value or key=value (repeatable)")
        ->allow_extra_args(false);
    sub->add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    sub->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  };
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"run", "Run one strategy, write its trajectory and a summary"},
           {"compare", "Run several strategies and tabulate hit times"},
           {"sweep", "Cartesian sweep over [sweep] keys x strategies"},
           {"synthesize", "Build and save the two-compartment optimal synthesis"},
           {"certify", "Cross-check the optimal strategy against the HJB oracle"}}) {
    add_common(app.add_subcommand(name, help));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const auto* sub = app.get_subcommands().front();

  ConfigDoc doc;
  try {
    if (!config_path.empty()) doc = ConfigDoc::load(config_path);
    for (const auto& o : overrides) doc.apply_override(o);
  } catch (const ConfigError&) {
    print_error_summary(std::cerr, sub->get_name(),
                        {describe_exception("configuration", std::current_exception())});
    return 1;
  }

  Settings settings;
  if (!out_dir.empty()) settings.out_dir = out_dir;
  settings.jobs = jobs;
  return execute(sub->get_name(), doc, settings, std::cout, std::cerr);
}
